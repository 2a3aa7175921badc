//! Worker quality control with gold questions.
//!
//! Workers must answer at least two gold claims and get strictly more than
//! 80% of them right (≤ 3 on clearly-true claims, ≥ 4 on clearly-false
//! ones, on the perceived-falsehood scale).
//!
//! ```bash
//! cargo run --example gold_filtering
//! ```

use opinion_qc::ingest::{filter_workers_by_gold_accuracy, GoldSpec, GoldVerdict};
use opinion_qc::model::{AnnotationRecord, Source, Veracity};

fn answer(worker: &str, claim: &str, label: u8) -> AnnotationRecord {
    AnnotationRecord {
        claim_id: claim.to_string(),
        topic: "Gold".to_string(),
        veracity: Veracity::Unknown,
        condition: "man".to_string(),
        source: Source::Human,
        label,
        annotator_id: worker.to_string(),
    }
}

fn main() {
    let gold = vec![
        GoldSpec {
            claim_id: "circle-round".into(),
            expected_verdict: GoldVerdict::ClearlyTrue,
        },
        GoldSpec {
            claim_id: "tree-to-mars".into(),
            expected_verdict: GoldVerdict::ClearlyFalse,
        },
        GoldSpec {
            claim_id: "paris-in-france".into(),
            expected_verdict: GoldVerdict::ClearlyTrue,
        },
    ];

    let records = vec![
        // attentive: 3/3 gold correct
        answer("attentive", "circle-round", 1),
        answer("attentive", "tree-to-mars", 6),
        answer("attentive", "paris-in-france", 2),
        answer("attentive", "real-claim", 4),
        // careless: 1/3 gold correct
        answer("careless", "circle-round", 6),
        answer("careless", "tree-to-mars", 6),
        answer("careless", "paris-in-france", 5),
        answer("careless", "real-claim", 3),
        // drive-by: saw only one gold question
        answer("drive-by", "circle-round", 1),
        answer("drive-by", "real-claim", 2),
        // duplicate answer from attentive, dropped before scoring
        answer("attentive", "circle-round", 5),
    ];

    let outcome = filter_workers_by_gold_accuracy(&records, &gold, 0.8, 2).unwrap();
    println!("duplicates removed: {}", outcome.duplicates_removed);
    println!("kept records: {}", outcome.kept.len());
    for dropped in &outcome.dropped_workers {
        println!(
            "dropped {:<9} ({:?}, {}/{} gold correct)",
            dropped.annotator_id, dropped.reason, dropped.gold_correct, dropped.gold_seen
        );
    }
}
