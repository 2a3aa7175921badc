//! Summary statistics for an annotation file: per (topic, condition)
//! counts, means, and standard deviations, plus claim counts by veracity.
//!
//! ```bash
//! cargo run --example summarize_human_data [path/to/annotations.csv]
//! ```

use std::path::{Path, PathBuf};

use opinion_qc::ingest::{load_annotations, summarize_dataset, AnnotationFormat};

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/human_subset.csv")
    });
    let records = load_annotations(&path, AnnotationFormat::from_path(&path)).unwrap();
    let summary = summarize_dataset(&records).unwrap();

    println!("{:<12} {:<10} {:>5} {:>7} {:>7}", "topic", "condition", "n", "mean", "std");
    for row in &summary.condition_rows {
        println!(
            "{:<12} {:<10} {:>5} {:>7.2} {:>7.2}{}",
            row.topic,
            row.condition,
            row.n,
            row.mean,
            row.std_dev,
            if row.single_sample { "  (n=1)" } else { "" }
        );
    }
    println!();
    println!("{:<12} {:>5} {:>6} {:>8}", "topic", "true", "false", "unknown");
    for row in &summary.topic_rows {
        println!(
            "{:<12} {:>5} {:>6} {:>8}",
            row.topic, row.true_claims, row.false_claims, row.unknown_claims
        );
    }
}
