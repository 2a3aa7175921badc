//! Benchmark scores across simulation methods, one column per check.

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignmentReport, Verdict};
use crate::consistency::{StrongTestReport, WeakTestReport};

use super::ReportError;

/// All four check outputs for one simulation method.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodReports {
    pub method: String,
    /// One weak report per topic.
    pub weak: Vec<WeakTestReport>,
    /// One strong report per topic.
    pub strong: Vec<StrongTestReport>,
    /// Alignment vs. stakeholder priors, one per topic.
    pub qc2a: Vec<AlignmentReport>,
    /// Alignment vs. human reference data, one per topic.
    pub qc2b: Vec<AlignmentReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: String,
    /// Fraction of (topic, p₀) cells feasible.
    pub qc1a: f64,
    /// Fraction of topics with a nonempty feasible q₀ set.
    pub qc1b: f64,
    /// Fraction of topics whose verdict agrees with the prior.
    pub qc2a: f64,
    /// Fraction of topics where the human-reference test fails to reject.
    pub qc2b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkSummary {
    pub fn to_markdown(&self) -> String {
        let mut out =
            String::from("| Method | QC1a | QC1b | QC2a | QC2b |\n|---|---|---|---|---|\n");
        for row in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                row.method,
                format_percent(row.qc1a),
                format_percent(row.qc1b),
                format_percent(row.qc2a),
                format_percent(row.qc2b),
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,qc1a,qc1b,qc2a,qc2b\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:?},{:?},{:?},{:?}\n",
                row.method, row.qc1a, row.qc1b, row.qc2a, row.qc2b
            ));
        }
        out
    }
}

/// Render a score as a whole percentage, e.g. 7/16 → "44%".
pub fn format_percent(score: f64) -> String {
    format!("{}%", (score * 100.0).round() as i64)
}

/// Score each method: QC1a over (topic, threshold) cells, the rest over
/// topics. Every method must carry all four check types.
pub fn benchmark_summary(methods: &[MethodReports]) -> Result<BenchmarkSummary, ReportError> {
    if methods.is_empty() {
        return Err(ReportError::NothingToRender);
    }
    let mut rows = Vec::with_capacity(methods.len());
    for m in methods {
        for (check, empty) in [
            ("qc1a", m.weak.is_empty()),
            ("qc1b", m.strong.is_empty()),
            ("qc2a", m.qc2a.is_empty()),
            ("qc2b", m.qc2b.is_empty()),
        ] {
            if empty {
                return Err(ReportError::MissingCheck {
                    method: m.method.clone(),
                    check: check.into(),
                });
            }
        }

        let cells: usize = m.weak.iter().map(|r| r.thresholds.len()).sum();
        let feasible_cells: usize = m
            .weak
            .iter()
            .map(|r| r.thresholds.iter().filter(|t| !t.reject).count())
            .sum();
        let qc1a = feasible_cells as f64 / cells as f64;

        let qc1b = m
            .strong
            .iter()
            .filter(|r| r.results.iter().any(|q| !q.reject))
            .count() as f64
            / m.strong.len() as f64;

        let qc2a = m
            .qc2a
            .iter()
            .filter(|r| r.verdict == Verdict::ConsistentWithPrior)
            .count() as f64
            / m.qc2a.len() as f64;

        let qc2b = m.qc2b.iter().filter(|r| !r.significant()).count() as f64
            / m.qc2b.len() as f64;

        rows.push(BenchmarkRow {
            method: m.method.clone(),
            qc1a,
            qc1b,
            qc2a,
            qc2b,
        });
    }
    Ok(BenchmarkSummary { rows })
}
