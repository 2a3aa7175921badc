//! Strong logical-consistency test: is there one mixture weight q₀ that
//! reconstructs the average-conditioned opinion across a whole topic?
//!
//! Data is generated with a known true mixture of 0.3/0.7, so the feasible
//! interval should cover 0.3 and exclude the far end of the grid.
//!
//! ```bash
//! cargo run --release --example strong_consistency
//! ```

use opinion_qc::calibration::{generate_synthetic_topic, GroupSpec, SyntheticSpec};
use opinion_qc::consistency::{strong_topic_test, StrongTestConfig};
use opinion_qc::stats::BootstrapConfig;

fn spread(center: u8) -> Vec<f64> {
    let mut dist = vec![0.05; 6];
    dist[center as usize - 1] += 0.55;
    dist[(center as usize).min(5)] += 0.15;
    let total: f64 = dist.iter().sum();
    dist.iter().map(|p| p / total).collect()
}

fn main() {
    let spec = SyntheticSpec {
        groups: vec![
            GroupSpec {
                name: "man".into(),
                distribution: spread(2),
            },
            GroupSpec {
                name: "woman".into(),
                distribution: spread(5),
            },
        ],
        true_mixture: vec![0.3, 0.7],
        claims: 25,
        n_per_cell: 20,
        seed: 11,
    };
    let data = generate_synthetic_topic(&spec).unwrap();

    let cfg = StrongTestConfig {
        bootstrap: BootstrapConfig::new(4_000, 7),
        ..StrongTestConfig::default()
    };
    let report = strong_topic_test(&data, &cfg).unwrap();

    println!(
        "topic: {}  claims: {}  B: {}  alpha*: {}",
        report.topic, report.n_claims, report.replicates, report.alpha_star
    );
    println!("\nq0      L̂_obs    p-value   decision");
    for r in &report.results {
        println!(
            "{:.2}   {:.4}   {:.4}    {}",
            r.q0[0],
            r.l_obs,
            r.p_value,
            if r.reject { "reject" } else { "feasible" }
        );
    }
    let feasible = report.feasible_scalars().unwrap();
    println!("\ntrue mixture weight: 0.30");
    println!("feasible q0 grid points: {feasible:?}");
}
