//! Weak logical-consistency test.
//!
//! Per claim, the average-conditioned mean should fall inside the convex
//! hull of the group-conditioned means. The topic passes at threshold `p₀`
//! when the bootstrap cannot rule out that the per-claim success rate is at
//! least `p₀`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{TopicDataset, BASE_CONDITION};
use crate::stats::{derive_rng, resample_mean, BootstrapConfig, RngStream};

use super::ConsistencyError;

/// Thresholds, significance level, and bootstrap settings for the weak test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakTestConfig {
    /// Acceptable success rates p₀ to test.
    pub thresholds: Vec<f64>,
    /// Rejection level α.
    pub alpha: f64,
    pub bootstrap: BootstrapConfig,
    /// Tolerance for hull-membership and mean-degeneracy comparisons.
    pub eps: f64,
}

impl WeakTestConfig {
    pub fn with_seed(master_seed: u64) -> Self {
        Self {
            bootstrap: BootstrapConfig::new(10_000, master_seed),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConsistencyError> {
        if self.thresholds.is_empty() {
            return Err(ConsistencyError::InvalidConfig(
                "no thresholds given".into(),
            ));
        }
        for &p0 in &self.thresholds {
            if !(p0 > 0.0 && p0 <= 1.0) {
                return Err(ConsistencyError::InvalidConfig(format!(
                    "threshold p0={p0} outside (0, 1]"
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConsistencyError::InvalidConfig(format!(
                "alpha={} outside (0, 1)",
                self.alpha
            )));
        }
        self.bootstrap.validate()?;
        Ok(())
    }
}

impl Default for WeakTestConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.7, 0.8, 0.9, 1.0],
            alpha: 0.05,
            bootstrap: BootstrapConfig::default(),
            eps: 1e-9,
        }
    }
}

/// Implied two-group mixture weight, or a degeneracy marker when the group
/// means coincide and no weight is identified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MixtureWeight {
    /// q̂ = (μ_base − μ_g2) / (μ_g1 − μ_g2), unclipped.
    Weight(f64),
    /// Group means within eps of each other; carries |μ_base − μ_g1|.
    Degenerate { base_gap: f64 },
}

/// Solve μ_base = q·μ_g1 + (1−q)·μ_g2 for q.
pub fn implied_mixture_weight(mu_base: f64, mu_g1: f64, mu_g2: f64, eps: f64) -> MixtureWeight {
    if (mu_g1 - mu_g2).abs() > eps {
        MixtureWeight::Weight((mu_base - mu_g2) / (mu_g1 - mu_g2))
    } else {
        MixtureWeight::Degenerate {
            base_gap: (mu_base - mu_g1).abs(),
        }
    }
}

/// 1 iff `min(group_means) − eps ≤ mu_base ≤ max(group_means) + eps`.
///
/// For two groups with distinct means this coincides with the implied
/// mixture weight lying in [0, 1]; when the hull collapses to a point,
/// membership degenerates to |μ_base − μ| ≤ eps.
pub fn hull_indicator(group_means: &[f64], mu_base: f64, eps: f64) -> bool {
    debug_assert!(group_means.len() >= 2);
    let lo = group_means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = group_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lo - eps <= mu_base && mu_base <= hi + eps
}

/// Observed per-claim outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakClaimResult {
    pub claim_id: String,
    /// Implied mixture weight; only present for two-group datasets with
    /// distinct group means.
    pub q_hat: Option<f64>,
    /// |μ_base − μ_group| when the two-group hull is degenerate.
    pub degenerate_gap: Option<f64>,
    pub indicator: bool,
}

/// One threshold's decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub p0: f64,
    /// Empirical p̂(p₀) = (1/B)·#{b : P̂⁽ᵇ⁾ ≥ p₀}.
    pub p_value: f64,
    pub reject: bool,
}

/// Weak-test outcome for one topic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTestReport {
    pub topic: String,
    pub groups: Vec<String>,
    pub n_claims: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub alpha: f64,
    /// Success rate of the sample means, computed without resampling.
    /// Reported for context; the decision rule uses only the bootstrap.
    pub p_obs: f64,
    pub claims: Vec<WeakClaimResult>,
    pub thresholds: Vec<ThresholdResult>,
}

impl WeakTestReport {
    /// Thresholds not rejected.
    pub fn feasible_thresholds(&self) -> Vec<f64> {
        self.thresholds
            .iter()
            .filter(|t| !t.reject)
            .map(|t| t.p0)
            .collect()
    }
}

/// Per-claim resampling streams, one root per (claim, condition), with the
/// replicate index mapped to a substream.
struct ClaimSampler<'a> {
    labels: Vec<&'a [u8]>,
    streams: Vec<RngStream>,
    base_labels: &'a [u8],
    base_stream: RngStream,
}

impl ClaimSampler<'_> {
    /// Bootstrap means for replicate `b`: group means in group order,
    /// then the base mean.
    fn bootstrap_means(&self, b: u64, group_means: &mut [f64]) -> f64 {
        for (slot, (labels, stream)) in group_means
            .iter_mut()
            .zip(self.labels.iter().zip(&self.streams))
        {
            *slot = resample_mean(labels, &mut stream.substream(b)).expect("nonempty cell");
        }
        resample_mean(self.base_labels, &mut self.base_stream.substream(b)).expect("nonempty cell")
    }
}

/// Run the weak logical-consistency test on one topic.
pub fn weak_topic_test(
    data: &TopicDataset,
    cfg: &WeakTestConfig,
) -> Result<WeakTestReport, ConsistencyError> {
    cfg.validate()?;
    if !data.has_base() {
        return Err(ConsistencyError::MissingBase);
    }

    let groups = data.groups();
    let topic = data.topic();
    let seed = cfg.bootstrap.master_seed;
    let two_groups = groups.len() == 2;

    let mut samplers = Vec::with_capacity(data.n_claims());
    let mut claims = Vec::with_capacity(data.n_claims());
    for claim_id in data.claim_ids() {
        let mut labels = Vec::with_capacity(groups.len());
        let mut streams = Vec::with_capacity(groups.len());
        let mut means = Vec::with_capacity(groups.len());
        for g in groups {
            let cell = data.cell(claim_id, g)?;
            labels.push(cell.labels.as_slice());
            means.push(cell.mean());
            streams.push(derive_rng(seed, &["qc1-weak", topic, claim_id, g]));
        }
        let base_cell = data.cell(claim_id, BASE_CONDITION)?;
        let base_mean = base_cell.mean();

        let (q_hat, degenerate_gap) = if two_groups {
            match implied_mixture_weight(base_mean, means[0], means[1], cfg.eps) {
                MixtureWeight::Weight(q) => (Some(q), None),
                MixtureWeight::Degenerate { base_gap } => (None, Some(base_gap)),
            }
        } else {
            (None, None)
        };
        claims.push(WeakClaimResult {
            claim_id: claim_id.to_string(),
            q_hat,
            degenerate_gap,
            indicator: hull_indicator(&means, base_mean, cfg.eps),
        });
        samplers.push(ClaimSampler {
            labels,
            streams,
            base_labels: base_cell.labels.as_slice(),
            base_stream: derive_rng(seed, &["qc1-weak", topic, claim_id, BASE_CONDITION]),
        });
    }

    let n_claims = claims.len();
    let p_obs = claims.iter().filter(|c| c.indicator).count() as f64 / n_claims as f64;

    // Bootstrap pass; replicates are independent and collected by index, so
    // the report does not depend on the worker count.
    let b_total = cfg.bootstrap.replicates;
    let eps = cfg.eps;
    let n_groups = groups.len();
    let phats: Vec<f64> = (0..b_total as u64)
        .into_par_iter()
        .map(|b| {
            let mut means = vec![0.0; n_groups];
            let mut hits = 0usize;
            for sampler in &samplers {
                let base = sampler.bootstrap_means(b, &mut means);
                if hull_indicator(&means, base, eps) {
                    hits += 1;
                }
            }
            hits as f64 / n_claims as f64
        })
        .collect();

    let thresholds = cfg
        .thresholds
        .iter()
        .map(|&p0| {
            let p_value =
                phats.iter().filter(|&&p| p >= p0).count() as f64 / b_total as f64;
            ThresholdResult {
                p0,
                p_value,
                reject: p_value < cfg.alpha,
            }
        })
        .collect();

    Ok(WeakTestReport {
        topic: topic.to_string(),
        groups: groups.to_vec(),
        n_claims,
        replicates: b_total,
        master_seed: seed,
        alpha: cfg.alpha,
        p_obs,
        claims,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_topic_dataset, AnnotationRecord, Source, Veracity};

    fn constant_cell_records(
        claim: &str,
        men: u8,
        women: u8,
        base: u8,
        n: usize,
    ) -> Vec<AnnotationRecord> {
        let mut recs = Vec::new();
        for (cond, label) in [("man", men), ("woman", women), ("base", base)] {
            for i in 0..n {
                recs.push(AnnotationRecord {
                    claim_id: claim.into(),
                    topic: "T".into(),
                    veracity: Veracity::Unknown,
                    condition: cond.into(),
                    source: Source::Model {
                        name: "m".into(),
                        prompt_id: "p".into(),
                    },
                    label,
                    annotator_id: format!("s{i}"),
                });
            }
        }
        recs
    }

    fn two_claim_dataset(base_b: u8) -> TopicDataset {
        let mut recs = constant_cell_records("a", 2, 4, 3, 4);
        recs.extend(constant_cell_records("b", 2, 4, base_b, 4));
        build_topic_dataset(&recs, "T", &["man", "woman", "base"], 2)
            .unwrap()
            .0
    }

    #[test]
    fn implied_weight_examples() {
        assert_eq!(
            implied_mixture_weight(3.0, 2.0, 4.0, 1e-9),
            MixtureWeight::Weight(0.5)
        );
        assert_eq!(
            implied_mixture_weight(5.0, 2.0, 4.0, 1e-9),
            MixtureWeight::Weight(-0.5)
        );
        assert_eq!(
            implied_mixture_weight(2.0, 2.0, 4.0, 1e-9),
            MixtureWeight::Weight(1.0)
        );
        match implied_mixture_weight(3.5, 3.0, 3.0, 1e-9) {
            MixtureWeight::Degenerate { base_gap } => assert!((base_gap - 0.5).abs() < 1e-12),
            other => panic!("expected degenerate, got {other:?}"),
        }
    }

    #[test]
    fn hull_indicator_examples() {
        assert!(hull_indicator(&[2.0, 4.0], 3.5, 1e-9));
        assert!(!hull_indicator(&[2.0, 4.0], 5.0, 1e-9));
        assert!(hull_indicator(&[1.0, 3.0, 5.0], 5.0, 1e-9));
        // Degenerate hull: membership within eps only.
        assert!(hull_indicator(&[3.0, 3.0], 3.0, 1e-9));
        assert!(!hull_indicator(&[3.0, 3.0], 3.1, 1e-9));
    }

    #[test]
    fn hull_indicator_affine_invariance() {
        // A strictly increasing affine map applied to all means preserves
        // the (eps = 0) indicator.
        let cases = [
            ([2.0, 4.0], 3.0),
            ([2.0, 4.0], 5.0),
            ([1.0, 3.5], 1.0),
            ([2.5, 2.5], 2.5),
        ];
        for (means, base) in cases {
            let before = hull_indicator(&means, base, 0.0);
            for (a, b) in [(0.5, 1.0), (2.0, -3.0), (1.0, 0.25)] {
                let mapped: Vec<f64> = means.iter().map(|m| a * m + b).collect();
                assert_eq!(hull_indicator(&mapped, a * base + b, 0.0), before);
            }
        }
    }

    #[test]
    fn constant_labels_make_bootstrap_deterministic() {
        // Claim a: base inside hull, claim b: base outside. Every replicate
        // sees P̂ = 0.5, so p̂(0.7) = 0 (reject) and p̂ at or below 0.5 is 1.
        let data = two_claim_dataset(5);
        let cfg = WeakTestConfig {
            thresholds: vec![0.5, 0.7, 0.8, 0.9, 1.0],
            bootstrap: BootstrapConfig::new(400, 11),
            ..WeakTestConfig::default()
        };
        let report = weak_topic_test(&data, &cfg).unwrap();
        assert_eq!(report.p_obs, 0.5);
        assert_eq!(report.thresholds[0].p_value, 1.0);
        for t in &report.thresholds[1..] {
            assert_eq!(t.p_value, 0.0, "p0={}", t.p0);
            assert!(t.reject);
        }
        assert_eq!(report.feasible_thresholds(), vec![0.5]);
        // Per-claim observed weights: (3−4)/(2−4) = 0.5 and (5−4)/(2−4) = −0.5.
        assert_eq!(report.claims[0].q_hat, Some(0.5));
        assert_eq!(report.claims[1].q_hat, Some(-0.5));
    }

    #[test]
    fn all_consistent_claims_pass_every_threshold() {
        let data = two_claim_dataset(3);
        let cfg = WeakTestConfig {
            bootstrap: BootstrapConfig::new(400, 11),
            ..WeakTestConfig::default()
        };
        let report = weak_topic_test(&data, &cfg).unwrap();
        assert_eq!(report.p_obs, 1.0);
        for t in &report.thresholds {
            assert_eq!(t.p_value, 1.0);
            assert!(!t.reject);
        }
    }

    #[test]
    fn group_order_does_not_change_outputs() {
        let data = two_claim_dataset(5);
        let cfg = WeakTestConfig {
            bootstrap: BootstrapConfig::new(300, 5),
            ..WeakTestConfig::default()
        };
        let report = weak_topic_test(&data, &cfg).unwrap();

        let mut recs = constant_cell_records("a", 2, 4, 3, 4);
        recs.extend(constant_cell_records("b", 2, 4, 5, 4));
        let (swapped, _) = build_topic_dataset(&recs, "T", &["woman", "man", "base"], 2).unwrap();
        let report_swapped = weak_topic_test(&swapped, &cfg).unwrap();
        assert_eq!(report.p_obs, report_swapped.p_obs);
        for (a, b) in report.thresholds.iter().zip(&report_swapped.thresholds) {
            assert_eq!(a.p_value, b.p_value);
            assert_eq!(a.reject, b.reject);
        }
        for (a, b) in report.claims.iter().zip(&report_swapped.claims) {
            assert_eq!(a.indicator, b.indicator);
        }
    }

    #[test]
    fn monotone_in_p0_on_noisy_data() {
        let mut recs = Vec::new();
        for c in 0..6 {
            let claim = format!("c{c}");
            for (cond, labels) in [
                ("man", [1u8, 2, 2, 3]),
                ("woman", [4, 5, 5, 6]),
                ("base", [1, 3, 5, 6]),
            ] {
                for (i, &l) in labels.iter().enumerate() {
                    recs.push(AnnotationRecord {
                        claim_id: claim.clone(),
                        topic: "T".into(),
                        veracity: Veracity::Unknown,
                        condition: cond.into(),
                        source: Source::Human,
                        label: l.saturating_add(c as u8 % 2).min(6),
                        annotator_id: format!("s{i}"),
                    });
                }
            }
        }
        let (data, _) = build_topic_dataset(&recs, "T", &["man", "woman", "base"], 2).unwrap();
        let cfg = WeakTestConfig {
            bootstrap: BootstrapConfig::new(500, 3),
            ..WeakTestConfig::default()
        };
        let report = weak_topic_test(&data, &cfg).unwrap();
        for pair in report.thresholds.windows(2) {
            assert!(pair[1].p_value <= pair[0].p_value);
        }
    }
}
