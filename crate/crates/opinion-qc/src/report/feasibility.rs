//! Feasibility output: which p₀ thresholds and q₀ mixture weights survive
//! for each (model, prompt, topic) panel, as structured JSON plus a
//! self-contained SVG.

use serde::{Deserialize, Serialize};

use crate::consistency::{StrongTestReport, WeakTestReport};

use super::ReportError;

/// Feasible sets for one (model, prompt, topic) combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityPanel {
    pub model: String,
    pub prompt: String,
    pub topic: String,
    /// Thresholds tested by the weak test.
    pub p0_grid: Vec<f64>,
    pub feasible_p0: Vec<f64>,
    /// Scalar q₀ grid for two-group runs; empty otherwise.
    pub q0_grid: Vec<f64>,
    pub feasible_q0: Vec<f64>,
    /// Maximal contiguous runs of feasible q₀ grid points.
    pub q0_intervals: Vec<(f64, f64)>,
    /// Feasible weight vectors for runs with more than two groups.
    pub feasible_weight_vectors: Vec<Vec<f64>>,
}

/// Collapse a feasible subset of a sorted grid into maximal runs of
/// consecutive grid points; gaps yield multiple intervals.
pub fn intervals_from_grid(grid: &[f64], feasible: &[f64]) -> Vec<(f64, f64)> {
    let mut intervals = Vec::new();
    let mut run_start: Option<f64> = None;
    let mut run_end = 0.0;
    for &point in grid {
        if feasible.contains(&point) {
            if run_start.is_none() {
                run_start = Some(point);
            }
            run_end = point;
        } else if let Some(start) = run_start.take() {
            intervals.push((start, run_end));
        }
    }
    if let Some(start) = run_start {
        intervals.push((start, run_end));
    }
    intervals
}

/// Assemble the panel for a (weak, strong) report pair.
pub fn feasibility_panel(
    model: &str,
    prompt: &str,
    weak: &WeakTestReport,
    strong: &StrongTestReport,
) -> FeasibilityPanel {
    let p0_grid: Vec<f64> = weak.thresholds.iter().map(|t| t.p0).collect();
    let feasible_p0 = weak.feasible_thresholds();
    let (q0_grid, feasible_q0, q0_intervals, vectors) = match strong.scalar_grid() {
        Some(grid) => {
            let feasible = strong.feasible_scalars().unwrap_or_default();
            let intervals = intervals_from_grid(&grid, &feasible);
            (grid, feasible, intervals, Vec::new())
        }
        None => (Vec::new(), Vec::new(), Vec::new(), strong.feasible_weights()),
    };
    FeasibilityPanel {
        model: model.to_string(),
        prompt: prompt.to_string(),
        topic: weak.topic.clone(),
        p0_grid,
        feasible_p0,
        q0_grid,
        feasible_q0,
        q0_intervals,
        feasible_weight_vectors: vectors,
    }
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 96.0;
const MARGIN_X: f64 = 140.0;
const AXIS_W: f64 = 190.0;

fn x_of(value: f64) -> f64 {
    MARGIN_X + value * AXIS_W
}

fn svg_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render panels as JSON (exact grids, full precision) and a dependency-free
/// SVG: feasible p₀ markers on the top row, feasible q₀ intervals on [0, 1]
/// below, "none" when a feasible set is empty.
pub fn emit_feasibility(panels: &[FeasibilityPanel]) -> Result<(String, String), ReportError> {
    if panels.is_empty() {
        return Err(ReportError::NothingToRender);
    }
    let json = serde_json::to_string_pretty(panels).expect("panels serialize");

    let height = 40.0 + PANEL_H * panels.len() as f64;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_W}\" height=\"{height}\" viewBox=\"0 0 {PANEL_W} {height}\">\n"
    ));
    svg.push_str("<style>text{font-family:sans-serif;font-size:10px;}</style>\n");
    svg.push_str("<text x=\"8\" y=\"16\" font-weight=\"bold\">Feasible thresholds and mixture weights</text>\n");

    for (i, panel) in panels.iter().enumerate() {
        let top = 28.0 + PANEL_H * i as f64;
        let label = format!("{} / {} / {}", panel.model, panel.prompt, panel.topic);
        svg.push_str(&format!(
            "<text x=\"8\" y=\"{}\">{}</text>\n",
            top + 12.0,
            svg_escape(&label)
        ));

        // Weak row: one marker per tested p0, filled when feasible.
        let weak_y = top + 34.0;
        svg.push_str(&format!(
            "<text x=\"8\" y=\"{}\">weak p0</text>\n",
            weak_y + 3.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{weak_y}\" x2=\"{}\" y2=\"{weak_y}\" stroke=\"#999\"/>\n",
            x_of(0.0),
            x_of(1.0)
        ));
        for &p0 in &panel.p0_grid {
            let feasible = panel.feasible_p0.contains(&p0);
            let fill = if feasible { "#1f77b4" } else { "none" };
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{weak_y}\" r=\"4\" fill=\"{fill}\" stroke=\"#1f77b4\"/>\n",
                x_of(p0)
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{p0}</text>\n",
                x_of(p0),
                weak_y - 7.0
            ));
        }
        if panel.feasible_p0.is_empty() {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"#c00\">none</text>\n",
                x_of(1.0) + 8.0,
                weak_y + 3.0
            ));
        }

        // Strong row: intervals on [0, 1].
        let strong_y = top + 62.0;
        svg.push_str(&format!(
            "<text x=\"8\" y=\"{}\">strong q0</text>\n",
            strong_y + 3.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{strong_y}\" x2=\"{}\" y2=\"{strong_y}\" stroke=\"#999\"/>\n",
            x_of(0.0),
            x_of(1.0)
        ));
        for (lo, hi) in &panel.q0_intervals {
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"6\" fill=\"#2ca02c\"/>\n",
                x_of(*lo),
                strong_y - 3.0,
                (x_of(*hi) - x_of(*lo)).max(2.0)
            ));
        }
        for &q0 in &panel.feasible_q0 {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{strong_y}\" r=\"2.5\" fill=\"#2ca02c\"/>\n",
                x_of(q0)
            ));
        }
        if panel.q0_intervals.is_empty() && panel.feasible_weight_vectors.is_empty() {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"#c00\">none</text>\n",
                x_of(1.0) + 8.0,
                strong_y + 3.0
            ));
        } else if !panel.feasible_weight_vectors.is_empty() {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\">{} feasible vectors (see JSON)</text>\n",
                x_of(0.0),
                strong_y + 16.0,
                panel.feasible_weight_vectors.len()
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok((svg, json))
}
