//! Collection loop against an in-process endpoint: rendering, retries,
//! incremental persistence, and crash-safe resume — no network needed.
//!
//! Any `ChatEndpoint` works here; swap in `HttpChatEndpoint` pointed at a
//! chat-completions URL for real runs.
//!
//! ```bash
//! cargo run --example collect_from_mock
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};

use opinion_qc::collect::{
    builtin_template, collect, ChatEndpoint, ChatRequest, ClaimInput, CollectorConfig, Persona,
    TransportError,
};
use opinion_qc::ingest::{load_annotations, AnnotationFormat};
use opinion_qc::model::Veracity;

/// Flaky endpoint: every third request times out, every seventh rambles.
struct FlakyEndpoint {
    calls: AtomicUsize,
}

impl ChatEndpoint for FlakyEndpoint {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if n % 3 == 2 {
            return Err(TransportError::Network("simulated timeout".into()));
        }
        if n % 7 == 6 {
            return Ok("I would rather not pick a number.".into());
        }
        // Deterministic "rating" from the prompt text.
        let user = &request.messages.last().unwrap().content;
        let rating = 1 + (user.len() + n) % 6;
        Ok(format!("I would rate it as a: {rating}"))
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let sink = dir.path().join("annotations.jsonl");

    let claims = vec![
        ClaimInput {
            claim_id: "c1".into(),
            topic: "HealthScience".into(),
            veracity: Veracity::False,
            text: "Ingesting Borax has health benefits".into(),
        },
        ClaimInput {
            claim_id: "c2".into(),
            topic: "HealthScience".into(),
            veracity: Veracity::True,
            text: "Vaccines undergo clinical trials before approval".into(),
        },
    ];
    let personas = vec![Persona::Man, Persona::Woman];
    let templates = vec![
        builtin_template("cond1").unwrap(),
        builtin_template("base1").unwrap(),
    ];
    let mut cfg = CollectorConfig::new("demo-model");
    cfg.samples_per_cell = 4;
    cfg.max_retries = 3;

    let endpoint = FlakyEndpoint {
        calls: AtomicUsize::new(0),
    };
    let outcome = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
    println!(
        "first run: {} records, {} retries logged, {} incomplete cells",
        outcome.new_records,
        outcome.retries.len(),
        outcome.incomplete.len()
    );

    // Running again is a no-op: every completed sample is skipped.
    let outcome = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
    println!(
        "second run: {} new records, {} skipped as already collected",
        outcome.new_records, outcome.skipped_existing
    );

    let records = load_annotations(&sink, AnnotationFormat::Jsonl).unwrap();
    println!("sink holds {} validated records, e.g.:", records.len());
    for rec in records.iter().take(3) {
        println!(
            "  {} {} {} label={} by {}",
            rec.claim_id,
            rec.condition,
            rec.source.prompt_id().unwrap_or("-"),
            rec.label,
            rec.annotator_id
        );
    }
}
