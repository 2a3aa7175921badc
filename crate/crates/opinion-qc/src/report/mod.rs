//! Rendering test reports into Markdown/CSV/JSON tables, benchmark
//! summaries, and feasibility plots.

mod benchmark;
mod feasibility;
mod tables;

pub use benchmark::{benchmark_summary, format_percent, BenchmarkRow, BenchmarkSummary, MethodReports};
pub use feasibility::{
    emit_feasibility, feasibility_panel, intervals_from_grid, FeasibilityPanel,
};
pub use tables::{render_topic_tables, ColorTag, LabeledAlignment, RenderedTables};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to render")]
    NothingToRender,
    #[error("method {method:?} is missing reports for check {check:?}")]
    MissingCheck { method: String, check: String },
}
