//! Score two simulation methods across all four checks and print the
//! summary table.
//!
//! ```bash
//! cargo run --release --example benchmark_methods
//! ```

use opinion_qc::alignment::{
    alignment_topic_test, AlignmentConfig, AlignmentReport, ExpectedGapSource, PriorDirection,
};
use opinion_qc::calibration::{generate_synthetic_topic, GroupSpec, SyntheticSpec};
use opinion_qc::consistency::{
    strong_topic_test, weak_topic_test, StrongTestConfig, WeakTestConfig,
};
use opinion_qc::model::TopicDataset;
use opinion_qc::report::{benchmark_summary, MethodReports};
use opinion_qc::stats::BootstrapConfig;

fn blend(center: u8, noise: f64) -> Vec<f64> {
    let mut dist = vec![noise / 6.0; 6];
    dist[center as usize - 1] += 1.0 - noise;
    dist
}

/// A "method" here is just a data-generating regime: the coherent one mixes
/// groups at a stable 0.5; the incoherent one answers identically for both
/// groups, eroding every expected gap.
fn generate(method: &str, topic_seed: u64) -> TopicDataset {
    let (men_center, women_center) = match method {
        "coherent" => (2, 5),
        _ => (3, 3),
    };
    generate_synthetic_topic(&SyntheticSpec {
        groups: vec![
            GroupSpec {
                name: "man".into(),
                distribution: blend(men_center, 0.15),
            },
            GroupSpec {
                name: "woman".into(),
                distribution: blend(women_center, 0.15),
            },
        ],
        true_mixture: vec![0.5, 0.5],
        claims: 12,
        n_per_cell: 12,
        seed: topic_seed,
    })
    .unwrap()
}

fn main() {
    let weak_cfg = WeakTestConfig {
        bootstrap: BootstrapConfig::new(2_000, 5),
        ..WeakTestConfig::default()
    };
    let strong_cfg = StrongTestConfig {
        bootstrap: BootstrapConfig::new(2_000, 5),
        ..StrongTestConfig::default()
    };
    let align_cfg = AlignmentConfig {
        group_order: opinion_qc::alignment::GroupOrder {
            plus: "woman".into(),
            minus: "man".into(),
        },
        ..AlignmentConfig::default()
    };

    let mut methods = Vec::new();
    for method in ["coherent", "flattening"] {
        let mut weak = Vec::new();
        let mut strong = Vec::new();
        let mut qc2a: Vec<AlignmentReport> = Vec::new();
        let mut qc2b: Vec<AlignmentReport> = Vec::new();
        for topic_seed in 0..4u64 {
            let data = generate(method, 40 + topic_seed);
            weak.push(weak_topic_test(&data, &weak_cfg).unwrap());
            strong.push(strong_topic_test(&data, &strong_cfg).unwrap());
            qc2a.push(
                alignment_topic_test(
                    &data,
                    &ExpectedGapSource::PriorZero {
                        direction: PriorDirection::ExpectDifference,
                    },
                    &align_cfg,
                )
                .unwrap(),
            );
            // Human reference: a population that genuinely splits 2 vs 5.
            let reference = generate("coherent", 400 + topic_seed);
            qc2b.push(
                alignment_topic_test(
                    &data,
                    &ExpectedGapSource::HumanReference { reference },
                    &align_cfg,
                )
                .unwrap(),
            );
        }
        methods.push(MethodReports {
            method: method.into(),
            weak,
            strong,
            qc2a,
            qc2b,
        });
    }

    let summary = benchmark_summary(&methods).unwrap();
    print!("{}", summary.to_markdown());
}
