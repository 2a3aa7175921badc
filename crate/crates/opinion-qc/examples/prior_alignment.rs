//! Alignment against stakeholder priors (the falsification test).
//!
//! Topic "Gold" should show no gender gap; topic "Abortion" should show a
//! clear one. A model that invents a gap on Gold exaggerates; one that
//! flattens Abortion erodes.
//!
//! ```bash
//! cargo run --example prior_alignment
//! ```

use opinion_qc::alignment::{
    alignment_topic_test, AlignmentConfig, ExpectedGapSource, PriorDirection,
};
use opinion_qc::model::{build_topic_dataset, AnnotationRecord, Source, Veracity};

fn cell(topic: &str, claim: &str, condition: &str, labels: &[u8]) -> Vec<AnnotationRecord> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &label)| AnnotationRecord {
            claim_id: claim.to_string(),
            topic: topic.to_string(),
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
    // On the consensus topic the model keeps inventing a gap of ~0.5.
    let mut gold = Vec::new();
    for c in 0..8 {
        let claim = format!("g{c}");
        gold.extend(cell("Gold", &claim, "man", &[1, 1, 1, 1, 1, 1, 1, 1, 1, 1]));
        let women = match c % 3 {
            0 => [1, 1, 1, 1, 1, 2, 2, 2, 2, 2], // +0.5
            1 => [1, 1, 1, 1, 1, 1, 2, 2, 2, 2], // +0.4
            _ => [1, 1, 1, 1, 2, 2, 2, 2, 2, 2], // +0.6
        };
        gold.extend(cell("Gold", &claim, "woman", &women));
    }
    // On the divisive topic it simulates a real divide.
    let mut abortion = Vec::new();
    for c in 0..8 {
        let claim = format!("a{c}");
        abortion.extend(cell("Abortion", &claim, "man", &[2, 3, 2, 3, 2, 3, 2, 3, 2, 3]));
        abortion.extend(cell("Abortion", &claim, "woman", &[5, 5, 6, 5, 5, 4, 5, 5, 6, 5]));
    }

    let cfg = AlignmentConfig::default();
    for (records, topic, direction) in [
        (gold, "Gold", PriorDirection::ExpectNoDifference),
        (abortion, "Abortion", PriorDirection::ExpectDifference),
    ] {
        let (data, _) = build_topic_dataset(&records, topic, &["man", "woman"], 2).unwrap();
        let report = alignment_topic_test(
            &data,
            &ExpectedGapSource::PriorZero { direction },
            &cfg,
        )
        .unwrap();
        println!(
            "{:<9} prior={:?}  ḡ={:+.2}{}  p={:.2e}  -> {:?}",
            report.topic, direction, report.g_bar, report.stars, report.p_value, report.verdict
        );
    }
}
