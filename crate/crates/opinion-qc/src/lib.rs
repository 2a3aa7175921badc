//! Quality-control tests for group-conditioned Likert opinion data.
//!
//! The toolkit decides whether opinion data collected under demographic
//! conditions (typically simulated by a language model) passes two families
//! of statistical checks:
//!
//! * **Logical consistency** — per topic, does the "average"-conditioned
//!   opinion sit inside the convex hull of the group-conditioned opinions at
//!   an acceptable rate ([`consistency::weak_topic_test`]), and is there one
//!   stable mixture weight that reconstructs the average across all claims
//!   ([`consistency::strong_topic_test`])? Both are bootstrap hypothesis
//!   tests with deterministic, seedable resampling.
//! * **Alignment with expectations** — are simulated group gaps consistent
//!   with a stakeholder prior or with small-sample human reference data
//!   ([`alignment::alignment_topic_test`])? Implemented as a weighted
//!   one-sample t-test with harmonic-mean claim weights.
//!
//! Around the tests sit the pieces a real validation pipeline needs:
//! annotation ingestion with a gold-question worker filter ([`ingest`]),
//! a chat-completions collector with retry and crash-safe resume
//! ([`collect`]), synthetic-population calibration of test size and power
//! ([`calibration`]), and report rendering ([`report`]).
//!
//! Start with the runnable examples (`cargo run --example weak_consistency`)
//! or the `opinion-qc` binary for file-based pipelines.

pub mod alignment;
pub mod calibration;
pub mod cli;
pub mod collect;
pub mod consistency;
pub mod ingest;
pub mod manifest;
pub mod model;
pub mod report;
pub mod stats;
