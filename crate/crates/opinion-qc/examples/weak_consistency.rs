//! Weak logical-consistency test on a hand-built topic.
//!
//! Two claims get average-conditioned labels inside the hull of the group
//! means, one gets labels above it. Run with:
//!
//! ```bash
//! cargo run --example weak_consistency
//! ```

use opinion_qc::consistency::{weak_topic_test, WeakTestConfig};
use opinion_qc::model::{build_topic_dataset, AnnotationRecord, Source, Veracity};
use opinion_qc::stats::BootstrapConfig;

fn cell(claim: &str, condition: &str, labels: &[u8]) -> Vec<AnnotationRecord> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &label)| AnnotationRecord {
            claim_id: claim.to_string(),
            topic: "Abortion".to_string(),
            veracity: Veracity::Unknown,
            condition: condition.to_string(),
            source: Source::Model {
                name: "demo-model".to_string(),
                prompt_id: "cond1".to_string(),
            },
            label,
            annotator_id: format!("s{i}"),
        })
        .collect()
}

fn main() {
    let mut records = Vec::new();
    // Consistent claims: base mean sits between the group means.
    records.extend(cell("c1", "man", &[2, 2, 3, 2]));
    records.extend(cell("c1", "woman", &[4, 5, 4, 4]));
    records.extend(cell("c1", "base", &[3, 3, 4, 3]));
    records.extend(cell("c2", "man", &[1, 2, 2, 1]));
    records.extend(cell("c2", "woman", &[3, 3, 4, 3]));
    records.extend(cell("c2", "base", &[2, 2, 3, 2]));
    // Inconsistent claim: the "average" is more extreme than either group.
    records.extend(cell("c3", "man", &[2, 2, 2, 2]));
    records.extend(cell("c3", "woman", &[4, 4, 4, 4]));
    records.extend(cell("c3", "base", &[5, 6, 5, 6]));

    let (data, warnings) =
        build_topic_dataset(&records, "Abortion", &["man", "woman", "base"], 2).unwrap();
    assert!(warnings.is_empty());

    let cfg = WeakTestConfig {
        bootstrap: BootstrapConfig::new(5_000, 42),
        ..WeakTestConfig::default()
    };
    let report = weak_topic_test(&data, &cfg).unwrap();

    println!("topic: {}  claims: {}  B: {}", report.topic, report.n_claims, report.replicates);
    println!("observed in-hull rate: {:.3}\n", report.p_obs);
    println!("claim  q̂       in hull");
    for claim in &report.claims {
        println!(
            "{}     {:>6}   {}",
            claim.claim_id,
            claim.q_hat.map_or("—".to_string(), |q| format!("{q:.2}")),
            if claim.indicator { "yes" } else { "no" }
        );
    }
    println!("\np0     p̂(p0)    decision");
    for t in &report.thresholds {
        println!(
            "{:.2}   {:.4}   {}",
            t.p0,
            t.p_value,
            if t.reject { "reject" } else { "feasible" }
        );
    }
    println!("\nfeasible thresholds: {:?}", report.feasible_thresholds());
}
