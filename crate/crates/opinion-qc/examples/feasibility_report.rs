//! Run both consistency tests and render the feasible sets as a
//! self-contained SVG plus machine-readable JSON.
//!
//! ```bash
//! cargo run --release --example feasibility_report
//! ```

use opinion_qc::calibration::{generate_synthetic_topic, GroupSpec, SyntheticSpec};
use opinion_qc::consistency::{
    strong_topic_test, weak_topic_test, StrongTestConfig, WeakTestConfig,
};
use opinion_qc::report::{emit_feasibility, feasibility_panel};
use opinion_qc::stats::BootstrapConfig;

fn blend(center: u8) -> Vec<f64> {
    let mut dist = vec![0.06; 6];
    dist[center as usize - 1] += 0.7;
    let total: f64 = dist.iter().sum();
    dist.iter().map(|p| p / total).collect()
}

fn main() {
    // One coherent population (stable 0.5 mixture) and one incoherent one
    // (the "average" leans far beyond both groups is impossible here, so we
    // instead shift the mixture to 0.9 to shrink the feasible interval).
    let mut panels = Vec::new();
    for (label, mixture) in [("balanced", 0.5), ("men-heavy", 0.9)] {
        let spec = SyntheticSpec {
            groups: vec![
                GroupSpec {
                    name: "man".into(),
                    distribution: blend(2),
                },
                GroupSpec {
                    name: "woman".into(),
                    distribution: blend(5),
                },
            ],
            true_mixture: vec![mixture, 1.0 - mixture],
            claims: 20,
            n_per_cell: 15,
            seed: 3,
        };
        let data = generate_synthetic_topic(&spec).unwrap();
        let weak = weak_topic_test(
            &data,
            &WeakTestConfig {
                bootstrap: BootstrapConfig::new(3_000, 1),
                ..WeakTestConfig::default()
            },
        )
        .unwrap();
        let strong = strong_topic_test(
            &data,
            &StrongTestConfig {
                bootstrap: BootstrapConfig::new(3_000, 1),
                ..StrongTestConfig::default()
            },
        )
        .unwrap();
        panels.push(feasibility_panel("demo-model", label, &weak, &strong));
    }

    for panel in &panels {
        println!(
            "{} / {}: feasible p0 {:?}, q0 intervals {:?}",
            panel.prompt, panel.topic, panel.feasible_p0, panel.q0_intervals
        );
    }

    let (svg, json) = emit_feasibility(&panels).unwrap();
    let out = std::env::temp_dir().join("opinion-qc-feasibility");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("feasibility.svg"), svg).unwrap();
    std::fs::write(out.join("feasibility.json"), json).unwrap();
    println!("\nwrote {}", out.join("feasibility.svg").display());
    println!("wrote {}", out.join("feasibility.json").display());
}
