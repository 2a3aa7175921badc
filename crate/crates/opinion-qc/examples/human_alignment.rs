//! Alignment against human reference data: does the model reproduce the
//! gender gaps humans actually showed, claim by claim?
//!
//! Uses the bundled human subset and a synthetic model that erases every
//! gap, so the test should reject loudly.
//!
//! ```bash
//! cargo run --example human_alignment
//! ```

use std::path::Path;

use opinion_qc::alignment::{alignment_topic_test, AlignmentConfig, ExpectedGapSource};
use opinion_qc::ingest::{load_annotations, AnnotationFormat};
use opinion_qc::model::{build_topic_dataset, AnnotationRecord, Source, Veracity};

fn main() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/human_subset.csv");
    let human = load_annotations(&fixture, AnnotationFormat::Csv).unwrap();
    let (reference, _) =
        build_topic_dataset(&human, "Abortion", &["man", "woman"], 1).unwrap();

    // A model that answers 4 for everyone erases the human gap entirely.
    let mut model_records: Vec<AnnotationRecord> = Vec::new();
    for claim_id in reference.claim_ids() {
        for condition in ["man", "woman"] {
            for i in 0..10 {
                model_records.push(AnnotationRecord {
                    claim_id: claim_id.to_string(),
                    topic: "Abortion".to_string(),
                    veracity: Veracity::Unknown,
                    condition: condition.to_string(),
                    source: Source::Model {
                        name: "flattener".to_string(),
                        prompt_id: "cond1".to_string(),
                    },
                    label: 4,
                    annotator_id: format!("s{i}"),
                });
            }
        }
    }
    let (model, _) =
        build_topic_dataset(&model_records, "Abortion", &["man", "woman"], 2).unwrap();

    let report = alignment_topic_test(
        &model,
        &ExpectedGapSource::HumanReference { reference },
        &AlignmentConfig::default(),
    )
    .unwrap();

    println!(
        "topic: {}  claims used: {}",
        report.topic, report.n_claims_used
    );
    println!("first claims (model gap vs human gap):");
    for gap in report.claims.iter().take(5) {
        println!(
            "  {}: D̂={:+.2}  E[D]={:+.2}  g={:+.2}  w={:.1}",
            gap.claim_id, gap.d_hat, gap.expected, gap.deviation, gap.weight
        );
    }
    println!(
        "\nḡ={:+.3}{}  SE={:.3}  ν={:.1}  p={:.3e}",
        report.g_bar, report.stars, report.se, report.nu, report.p_value
    );
    println!(
        "significant divergence from human gaps: {}",
        if report.significant() { "yes" } else { "no" }
    );
}
