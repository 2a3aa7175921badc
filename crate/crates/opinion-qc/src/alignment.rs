//! Alignment tests: do simulated group-opinion gaps match a stakeholder
//! prior (no gap / a clear gap) or human reference data?
//!
//! Per claim the gap is `D̂ = μ_plus − μ_minus`; the deviation from the
//! expected gap is weighted by half the harmonic mean of the two group
//! sample sizes and fed into a weighted one-sample t-test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClaimCell, ModelError, TopicDataset};
use crate::stats::{student_t_two_sided_p, weighted_mean_se, StatsError};

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("need at least 2 usable claims, found {0}")]
    TooFewClaims(usize),
    #[error("group {0:?} is not a condition of the dataset")]
    UnknownGroup(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Stakeholder expectation about the group gap of a topic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorDirection {
    /// The topic should not divide the groups (E\[D\] = 0 is believed).
    ExpectNoDifference,
    /// The topic is known to divide the groups; E\[D\] = 0 is a
    /// falsification target that a faithful simulation must reject.
    ExpectDifference,
}

/// Where the expected gap comes from.
#[derive(Clone, Debug)]
pub enum ExpectedGapSource {
    /// E\[D\] = 0 for every claim, judged against a stakeholder prior.
    PriorZero { direction: PriorDirection },
    /// E\[D\] per claim from human reference cells in the given dataset.
    HumanReference { reference: TopicDataset },
}

/// Which condition is the positive leg of the gap; default woman − man.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupOrder {
    pub plus: String,
    pub minus: String,
}

impl Default for GroupOrder {
    fn default() -> Self {
        Self {
            plus: "woman".into(),
            minus: "man".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlignmentConfig {
    /// Significance level for the verdict.
    pub alpha: f64,
    pub group_order: GroupOrder,
    /// Minimum labels a human reference cell must carry; cells below
    /// `warn_reference_below` draw a warning.
    pub min_reference_labels: usize,
    pub warn_reference_below: usize,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            group_order: GroupOrder::default(),
            min_reference_labels: 1,
            warn_reference_below: 3,
        }
    }
}

/// Significance stars: p < 0.05, 0.01, 0.001.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Stars::Three
        } else if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

impl std::fmt::Display for Stars {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome relative to the stakeholder prior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithPrior,
    /// A gap appeared where none was expected.
    ViolatesPriorExaggeration,
    /// An expected gap failed to appear.
    ViolatesPriorErosion,
    /// No prior direction supplied (human-reference runs).
    NotApplicable,
}

/// Per-claim gap bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimGap {
    pub claim_id: String,
    /// D̂ = μ_plus − μ_minus of the model cells.
    pub d_hat: f64,
    /// Expected gap E\[D\]: zero or the human gap in the same group order.
    pub expected: f64,
    /// g = D̂ − E\[D\].
    pub deviation: f64,
    /// w = n_plus·n_minus / (n_plus + n_minus), from the model cell sizes.
    pub weight: f64,
}

/// Compute one claim's gap deviation from its model cells.
pub fn claim_gap_deviation(
    plus_cell: &ClaimCell,
    minus_cell: &ClaimCell,
    expected: f64,
) -> ClaimGap {
    let d_hat = plus_cell.mean() - minus_cell.mean();
    let n_plus = plus_cell.len() as f64;
    let n_minus = minus_cell.len() as f64;
    ClaimGap {
        claim_id: plus_cell.claim_id.clone(),
        d_hat,
        expected,
        deviation: d_hat - expected,
        weight: n_plus * n_minus / (n_plus + n_minus),
    }
}

/// Classify against the prior: on expected-consensus topics a significant
/// gap is an exaggeration; on expected-divide topics a non-significant gap
/// is an erosion. Significance alone drives the violation, not the sign.
pub fn classify_verdict(
    _g_bar: f64,
    p: f64,
    alpha: f64,
    direction: Option<PriorDirection>,
) -> Verdict {
    let significant = p < alpha;
    match direction {
        None => Verdict::NotApplicable,
        Some(PriorDirection::ExpectNoDifference) => {
            if significant {
                Verdict::ViolatesPriorExaggeration
            } else {
                Verdict::ConsistentWithPrior
            }
        }
        Some(PriorDirection::ExpectDifference) => {
            if significant {
                Verdict::ConsistentWithPrior
            } else {
                Verdict::ViolatesPriorErosion
            }
        }
    }
}

/// Alignment-test outcome for one topic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub topic: String,
    pub group_order: GroupOrder,
    pub n_claims_used: usize,
    pub claims: Vec<ClaimGap>,
    /// Weighted mean deviation ḡ.
    pub g_bar: f64,
    pub se: f64,
    /// t = ḡ / SE; absent when SE = 0 (degenerate variance).
    pub t: Option<f64>,
    /// Degrees of freedom ν = Σw − 1.
    pub nu: f64,
    pub p_value: f64,
    pub stars: Stars,
    pub alpha: f64,
    pub verdict: Verdict,
    /// SE was zero; the p-value is the 0/1 limit rather than a t tail.
    pub degenerate_variance: bool,
    pub warnings: Vec<String>,
}

impl AlignmentReport {
    pub fn significant(&self) -> bool {
        self.p_value < self.alpha
    }
}

/// Run the weighted one-sample alignment test for one topic of model data.
///
/// Claims missing a model cell for either group — or, for human-reference
/// runs, missing a usable human cell — are skipped with a warning.
pub fn alignment_topic_test(
    data: &TopicDataset,
    expected: &ExpectedGapSource,
    cfg: &AlignmentConfig,
) -> Result<AlignmentReport, AlignmentError> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(AlignmentError::InvalidConfig(format!(
            "alpha={} outside (0, 1)",
            cfg.alpha
        )));
    }
    let order = &cfg.group_order;
    for leg in [&order.plus, &order.minus] {
        if !data.groups().contains(leg) {
            return Err(AlignmentError::UnknownGroup(leg.clone()));
        }
    }

    let mut warnings = Vec::new();
    let mut claims = Vec::new();
    for claim_id in data.claim_ids() {
        let cells = data.cells(claim_id).expect("claim iterated from dataset");
        let (plus, minus) = match (cells.get(&order.plus), cells.get(&order.minus)) {
            (Some(p), Some(m)) if !p.is_empty() && !m.is_empty() => (p, m),
            _ => {
                warnings.push(format!(
                    "claim {claim_id:?} skipped: missing model cell for {:?} or {:?}",
                    order.plus, order.minus
                ));
                continue;
            }
        };
        let expected_gap = match expected {
            ExpectedGapSource::PriorZero { .. } => 0.0,
            ExpectedGapSource::HumanReference { reference } => {
                let ref_cells = match reference.cells(claim_id) {
                    Some(c) => c,
                    None => {
                        warnings.push(format!(
                            "claim {claim_id:?} skipped: no human reference cells"
                        ));
                        continue;
                    }
                };
                let (rp, rm) = match (ref_cells.get(&order.plus), ref_cells.get(&order.minus)) {
                    (Some(p), Some(m))
                        if p.len() >= cfg.min_reference_labels
                            && m.len() >= cfg.min_reference_labels =>
                    {
                        (p, m)
                    }
                    _ => {
                        warnings.push(format!(
                            "claim {claim_id:?} skipped: human reference cell missing or below {} labels",
                            cfg.min_reference_labels
                        ));
                        continue;
                    }
                };
                if rp.len() < cfg.warn_reference_below || rm.len() < cfg.warn_reference_below {
                    warnings.push(format!(
                        "claim {claim_id:?}: human reference cell has fewer than {} labels",
                        cfg.warn_reference_below
                    ));
                }
                rp.mean() - rm.mean()
            }
        };
        claims.push(claim_gap_deviation(plus, minus, expected_gap));
    }

    if claims.len() < 2 {
        return Err(AlignmentError::TooFewClaims(claims.len()));
    }

    let deviations: Vec<f64> = claims.iter().map(|c| c.deviation).collect();
    let weights: Vec<f64> = claims.iter().map(|c| c.weight).collect();
    let stats = weighted_mean_se(&deviations, &weights)?;

    let (t, p_value, degenerate) = if stats.se == 0.0 {
        if stats.mean == 0.0 {
            (None, 1.0, true)
        } else {
            (None, 0.0, true)
        }
    } else {
        let t = stats.mean / stats.se;
        (Some(t), student_t_two_sided_p(t, stats.dof)?, false)
    };

    let direction = match expected {
        ExpectedGapSource::PriorZero { direction } => Some(*direction),
        ExpectedGapSource::HumanReference { .. } => None,
    };

    Ok(AlignmentReport {
        topic: data.topic().to_string(),
        group_order: order.clone(),
        n_claims_used: claims.len(),
        claims,
        g_bar: stats.mean,
        se: stats.se,
        t,
        nu: stats.dof,
        p_value,
        stars: Stars::from_p(p_value),
        alpha: cfg.alpha,
        verdict: classify_verdict(stats.mean, p_value, cfg.alpha, direction),
        degenerate_variance: degenerate,
        warnings,
    })
}
