//! Alignment result tables in the conventions of the headline tables:
//! ḡ with significance stars, color-tagged by agreement with the prior.

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignmentReport, Verdict};

use super::ReportError;

/// An alignment report labeled with the model/source it came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabeledAlignment {
    pub label: String,
    pub report: AlignmentReport,
}

/// Table cell color: blue agrees with the prior, red contradicts it. Runs
/// without a prior are colored by significant sign (blue positive, orange
/// negative) as in the human-reference table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorTag {
    Blue,
    Red,
    Orange,
    None,
}

pub(crate) fn color_tag(report: &AlignmentReport) -> ColorTag {
    match report.verdict {
        Verdict::ConsistentWithPrior => ColorTag::Blue,
        Verdict::ViolatesPriorExaggeration | Verdict::ViolatesPriorErosion => ColorTag::Red,
        Verdict::NotApplicable => {
            if !report.significant() {
                ColorTag::None
            } else if report.g_bar >= 0.0 {
                ColorTag::Blue
            } else {
                ColorTag::Orange
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenderedTables {
    pub markdown: String,
    pub csv: String,
    pub json: String,
}

/// Render one row per (label, topic): ḡ with stars, verdict, and color tag.
/// Markdown rounds ḡ to 2 decimals; CSV/JSON carry full precision.
pub fn render_topic_tables(reports: &[LabeledAlignment]) -> Result<RenderedTables, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::NothingToRender);
    }

    let mut markdown = String::from(
        "| Source | Topic | ḡ | p-value | Verdict | Tag |\n|---|---|---|---|---|---|\n",
    );
    let mut csv = String::from("source,topic,g_bar,se,t,nu,p_value,stars,verdict,tag\n");
    for entry in reports {
        let r = &entry.report;
        let tag = color_tag(r);
        markdown.push_str(&format!(
            "| {} | {} | {:.2}{} | {:.4} | {:?} | {:?} |\n",
            entry.label, r.topic, r.g_bar, r.stars, r.p_value, r.verdict, tag
        ));
        csv.push_str(&format!(
            "{},{},{:?},{:?},{},{:?},{:?},{},{:?},{:?}\n",
            entry.label,
            r.topic,
            r.g_bar,
            r.se,
            r.t.map_or(String::new(), |t| format!("{t:?}")),
            r.nu,
            r.p_value,
            r.stars,
            r.verdict,
            tag
        ));
    }
    let json = serde_json::to_string_pretty(
        &reports
            .iter()
            .map(|e| {
                serde_json::json!({
                    "label": e.label,
                    "tag": color_tag(&e.report),
                    "report": e.report,
                })
            })
            .collect::<Vec<_>>(),
    )
    .expect("reports serialize");

    Ok(RenderedTables {
        markdown,
        csv,
        json,
    })
}
