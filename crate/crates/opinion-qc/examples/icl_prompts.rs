//! In-context-learning prompt construction: random example draws and
//! nearest-neighbor retrieval by cosine similarity.
//!
//! ```bash
//! cargo run --example icl_prompts
//! ```

use opinion_qc::collect::{
    build_icl_prompt, EmbeddingStore, IclExample, IclSelector, Persona,
};
use opinion_qc::stats::derive_rng;

fn main() {
    let pool = vec![
        IclExample {
            claim_id: "p0".into(),
            text: "Food crops can be engineered to cause infertility".into(),
            man: 4.9,
            woman: 6.0,
            average: 5.1,
        },
        IclExample {
            claim_id: "p1".into(),
            text: "Progesterone can be used for abortion reversal".into(),
            man: 4.7,
            woman: 4.5,
            average: 4.6,
        },
        IclExample {
            claim_id: "p2".into(),
            text: "You'll never have children if you have an abortion".into(),
            man: 4.4,
            woman: 4.5,
            average: 4.4,
        },
        IclExample {
            claim_id: "p3".into(),
            text: "The longest field goal was 64 yards".into(),
            man: 1.0,
            woman: 1.1,
            average: 1.0,
        },
    ];
    let target_id = "t0";
    let target_text = "Aborted fetal cells are in artificial flavors";

    // Random selection, reproducible for a fixed seed.
    let mut rng = derive_rng(7, &["icl", target_id, "woman"]);
    let prompt = build_icl_prompt(
        &mut IclSelector::Random(&mut rng),
        3,
        &pool,
        target_id,
        target_text,
        Persona::Woman,
    )
    .unwrap();
    println!("=== random ICL prompt ===");
    println!("[system] {}", prompt.system.as_deref().unwrap());
    println!("{}\n", prompt.user);

    // Nearest-neighbor selection over toy embeddings: abortion-related
    // claims cluster on the first axis.
    let mut store = EmbeddingStore::default();
    store.insert("p0", vec![0.8, 0.6]);
    store.insert("p1", vec![0.95, 0.05]);
    store.insert("p2", vec![0.9, 0.1]);
    store.insert("p3", vec![0.0, 1.0]);
    store.insert(target_id, vec![1.0, 0.0]);
    let prompt = build_icl_prompt(
        &mut IclSelector::Nearest(&store),
        3,
        &pool,
        target_id,
        target_text,
        Persona::Base,
    )
    .unwrap();
    println!("=== nearest-neighbor ICL prompt ===");
    println!("{}", prompt.user);
}
