//! Synthetic populations with known ground truth, used to audit the size and
//! power of every test before trusting it on real data.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{
    alignment_topic_test, AlignmentConfig, AlignmentError, ExpectedGapSource, PriorDirection,
};
use crate::consistency::{
    strong_topic_test, weak_topic_test, ConsistencyError, StrongTestConfig, WeakTestConfig,
};
use crate::model::{ClaimCell, LikertScale, ModelError, TopicDataset, BASE_CONDITION};
use crate::stats::derive_rng;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}

/// A named group with a discrete label distribution over the 1..6 scale.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    /// Probabilities for labels 1..=6; must sum to 1.
    pub distribution: Vec<f64>,
}

/// Ground-truth description of a synthetic topic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub groups: Vec<GroupSpec>,
    /// Mixture weights the base condition is drawn from.
    pub true_mixture: Vec<f64>,
    pub claims: usize,
    pub n_per_cell: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if self.groups.len() < 2 {
            return Err(CalibrationError::InvalidSpec(
                "need at least two groups".into(),
            ));
        }
        for g in &self.groups {
            if g.distribution.len() != 6 {
                return Err(CalibrationError::InvalidSpec(format!(
                    "group {:?} distribution must have 6 entries",
                    g.name
                )));
            }
            if g.distribution.iter().any(|&p| p < 0.0) {
                return Err(CalibrationError::InvalidSpec(format!(
                    "group {:?} has a negative probability",
                    g.name
                )));
            }
            let sum: f64 = g.distribution.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CalibrationError::InvalidSpec(format!(
                    "group {:?} distribution sums to {sum}",
                    g.name
                )));
            }
        }
        if self.true_mixture.len() != self.groups.len() {
            return Err(CalibrationError::InvalidSpec(
                "true_mixture length must match groups".into(),
            ));
        }
        if self.true_mixture.iter().any(|&w| w < 0.0)
            || (self.true_mixture.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(CalibrationError::InvalidSpec(
                "true_mixture must lie on the simplex".into(),
            ));
        }
        if self.claims == 0 || self.n_per_cell == 0 {
            return Err(CalibrationError::InvalidSpec(
                "claims and n_per_cell must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CalibrationError> {
        let spec: SyntheticSpec = serde_json::from_str(text)
            .map_err(|e| CalibrationError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

fn draw_label(cumulative: &[f64], u: f64) -> u8 {
    for (i, &c) in cumulative.iter().enumerate() {
        if u < c {
            return i as u8 + 1;
        }
    }
    6
}

fn cumulative(dist: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    dist.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Generate a synthetic topic: each claim carries `n_per_cell` i.i.d. labels
/// per group from its distribution, plus `n_per_cell` base labels composed
/// from the true mixture with the same largest-remainder allocation the
/// strong test's null uses. Mirroring that construction keeps the test's
/// nominal size meaningful on generated data. Deterministic in the spec
/// seed.
pub fn generate_synthetic_topic(spec: &SyntheticSpec) -> Result<TopicDataset, CalibrationError> {
    spec.validate()?;
    let group_cdfs: Vec<Vec<f64>> = spec
        .groups
        .iter()
        .map(|g| cumulative(&g.distribution))
        .collect();
    let base_counts = crate::consistency::mixture_allocation(&spec.true_mixture, spec.n_per_cell);

    let width = spec.claims.to_string().len().max(3);
    let mut claims = BTreeMap::new();
    for c in 0..spec.claims {
        let claim_id = format!("c{c:0width$}");
        let mut cells = BTreeMap::new();
        for (g, cdf) in spec.groups.iter().zip(&group_cdfs) {
            let mut rng = derive_rng(spec.seed, &["synthetic", &claim_id, &g.name]);
            let labels: Vec<u8> = (0..spec.n_per_cell)
                .map(|_| draw_label(cdf, rng.random::<f64>()))
                .collect();
            cells.insert(
                g.name.clone(),
                ClaimCell {
                    claim_id: claim_id.clone(),
                    condition: g.name.clone(),
                    labels,
                },
            );
        }
        let mut rng = derive_rng(spec.seed, &["synthetic", &claim_id, BASE_CONDITION]);
        let mut labels = Vec::with_capacity(spec.n_per_cell);
        for (cdf, &count) in group_cdfs.iter().zip(&base_counts) {
            for _ in 0..count {
                labels.push(draw_label(cdf, rng.random::<f64>()));
            }
        }
        cells.insert(
            BASE_CONDITION.to_string(),
            ClaimCell {
                claim_id: claim_id.clone(),
                condition: BASE_CONDITION.to_string(),
                labels,
            },
        );
        claims.insert(claim_id, cells);
    }

    let groups = spec.groups.iter().map(|g| g.name.clone()).collect();
    Ok(TopicDataset::from_cells(
        "synthetic",
        groups,
        claims,
        LikertScale::six_point(),
    )?)
}

/// Which test a calibration run exercises.
#[derive(Clone, Debug)]
pub enum CalibrationTest {
    Weak(WeakTestConfig),
    Strong(StrongTestConfig),
    /// Alignment against the zero prior with the given expectation.
    Alignment(AlignmentConfig, PriorDirection),
}

impl CalibrationTest {
    pub fn name(&self) -> &'static str {
        match self {
            CalibrationTest::Weak(_) => "weak",
            CalibrationTest::Strong(_) => "strong",
            CalibrationTest::Alignment(..) => "alignment",
        }
    }
}

/// Rejection tally for one threshold / weight vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationEntry {
    /// p₀ value, q₀ vector label, or "alpha" for the alignment test.
    pub key: String,
    pub rejections: usize,
    pub rate: f64,
    /// Wilson score interval at the summary's confidence level.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub test: String,
    pub runs: usize,
    pub confidence: f64,
    pub entries: Vec<CalibrationEntry>,
}

/// Wilson score interval for a binomial proportion.
fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    // Wilson contains p̂ exactly in real arithmetic; keep that under
    // floating-point rounding at the 0/1 boundaries too.
    (
        (center - half).clamp(0.0, p),
        (center + half).clamp(p, 1.0),
    )
}

/// Repeat generate-then-test with derived seeds and report empirical
/// rejection rates with 95% Wilson intervals.
pub fn run_calibration(
    spec: &SyntheticSpec,
    test: &CalibrationTest,
    runs: usize,
) -> Result<CalibrationSummary, CalibrationError> {
    if runs == 0 {
        return Err(CalibrationError::InvalidSpec("runs must be ≥ 1".into()));
    }
    spec.validate()?;

    let mut counts: BTreeMap<usize, (String, usize)> = BTreeMap::new();
    for run in 0..runs {
        // Independent data seed and bootstrap seed per run, both derived
        // from the spec seed so the whole sweep is reproducible.
        let label = format!("run-{run}");
        let data_seed = derive_rng(spec.seed, &["calibration", &label, "data"]).random::<u64>();
        let boot_seed = derive_rng(spec.seed, &["calibration", &label, "boot"]).random::<u64>();
        let run_spec = SyntheticSpec {
            seed: data_seed,
            ..spec.clone()
        };
        let data = generate_synthetic_topic(&run_spec)?;

        match test {
            CalibrationTest::Weak(cfg) => {
                let mut cfg = cfg.clone();
                cfg.bootstrap.master_seed = boot_seed;
                let report = weak_topic_test(&data, &cfg)?;
                for (i, t) in report.thresholds.iter().enumerate() {
                    let entry = counts
                        .entry(i)
                        .or_insert_with(|| (format!("p0={}", t.p0), 0));
                    if t.reject {
                        entry.1 += 1;
                    }
                }
            }
            CalibrationTest::Strong(cfg) => {
                let mut cfg = cfg.clone();
                cfg.bootstrap.master_seed = boot_seed;
                let report = strong_topic_test(&data, &cfg)?;
                for (i, r) in report.results.iter().enumerate() {
                    let q: Vec<String> = r.q0.iter().map(|w| format!("{w}")).collect();
                    let entry = counts
                        .entry(i)
                        .or_insert_with(|| (format!("q0=({})", q.join(",")), 0));
                    if r.reject {
                        entry.1 += 1;
                    }
                }
            }
            CalibrationTest::Alignment(cfg, direction) => {
                // The test is two-sided, so the leg order only names the
                // sign; fall back to the spec's own group names when the
                // configured legs are absent.
                let mut cfg = cfg.clone();
                let names: Vec<&str> = spec.groups.iter().map(|g| g.name.as_str()).collect();
                if !names.contains(&cfg.group_order.plus.as_str())
                    || !names.contains(&cfg.group_order.minus.as_str())
                {
                    cfg.group_order = crate::alignment::GroupOrder {
                        plus: spec.groups[1].name.clone(),
                        minus: spec.groups[0].name.clone(),
                    };
                }
                let report = alignment_topic_test(
                    &data,
                    &ExpectedGapSource::PriorZero {
                        direction: *direction,
                    },
                    &cfg,
                )?;
                let entry = counts
                    .entry(0)
                    .or_insert_with(|| (format!("alpha={}", cfg.alpha), 0));
                if report.significant() {
                    entry.1 += 1;
                }
            }
        }
    }

    // 95% normal quantile for the Wilson interval.
    let z = 1.959_963_984_540_054;
    let entries = counts
        .into_values()
        .map(|(key, rejections)| {
            let rate = rejections as f64 / runs as f64;
            let (ci_low, ci_high) = wilson_interval(rejections, runs, z);
            CalibrationEntry {
                key,
                rejections,
                rate,
                ci_low,
                ci_high,
            }
        })
        .collect();

    Ok(CalibrationSummary {
        test: test.name().to_string(),
        runs,
        confidence: 0.95,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::BootstrapConfig;

    fn point_mass(label: u8) -> Vec<f64> {
        let mut d = vec![0.0; 6];
        d[label as usize - 1] = 1.0;
        d
    }

    fn two_group_spec(mixture: [f64; 2]) -> SyntheticSpec {
        SyntheticSpec {
            groups: vec![
                GroupSpec {
                    name: "men".into(),
                    distribution: point_mass(2),
                },
                GroupSpec {
                    name: "women".into(),
                    distribution: point_mass(4),
                },
            ],
            true_mixture: mixture.to_vec(),
            claims: 5,
            n_per_cell: 4,
            seed: 31,
        }
    }

    #[test]
    fn point_mass_groups_generate_expected_support() {
        let data = generate_synthetic_topic(&two_group_spec([0.5, 0.5])).unwrap();
        assert_eq!(data.n_claims(), 5);
        for claim in data.claim_ids() {
            assert!(data.cell(claim, "men").unwrap().labels.iter().all(|&l| l == 2));
            assert!(data.cell(claim, "women").unwrap().labels.iter().all(|&l| l == 4));
            assert!(data
                .cell(claim, "base")
                .unwrap()
                .labels
                .iter()
                .all(|&l| l == 2 || l == 4));
        }
    }

    #[test]
    fn degenerate_mixture_copies_first_group() {
        let data = generate_synthetic_topic(&two_group_spec([1.0, 0.0])).unwrap();
        for claim in data.claim_ids() {
            assert!(data.cell(claim, "base").unwrap().labels.iter().all(|&l| l == 2));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic_topic(&two_group_spec([0.5, 0.5])).unwrap();
        let b = generate_synthetic_topic(&two_group_spec([0.5, 0.5])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spec_validation_rejects_bad_input() {
        let mut spec = two_group_spec([0.5, 0.5]);
        spec.true_mixture = vec![0.5, 0.6];
        assert!(spec.validate().is_err());
        let mut spec = two_group_spec([0.5, 0.5]);
        spec.groups[0].distribution = vec![0.5; 4];
        assert!(spec.validate().is_err());
        let mut spec = two_group_spec([0.5, 0.5]);
        spec.claims = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn json_spec_round_trip() {
        let text = r#"{
            "groups": [
                {"name": "men", "distribution": [0, 1, 0, 0, 0, 0]},
                {"name": "women", "distribution": [0, 0, 0, 1, 0, 0]}
            ],
            "true_mixture": [0.5, 0.5],
            "claims": 3,
            "n_per_cell": 4,
            "seed": 1
        }"#;
        let spec = SyntheticSpec::from_json(text).unwrap();
        assert_eq!(spec.groups[1].name, "women");
        assert_eq!(spec.claims, 3);
    }

    #[test]
    fn calibration_summary_is_reproducible() {
        let spec = two_group_spec([0.5, 0.5]);
        let test = CalibrationTest::Weak(WeakTestConfig {
            bootstrap: BootstrapConfig::new(120, 0),
            ..WeakTestConfig::default()
        });
        let a = run_calibration(&spec, &test, 6).unwrap();
        let b = run_calibration(&spec, &test, 6).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.entries.len(), 4);
        for e in &a.entries {
            assert!(e.ci_low <= e.rate && e.rate <= e.ci_high);
        }
    }

    #[test]
    fn identical_uniform_groups_leave_the_indicator_at_one_third() {
        // With both groups uniform over 1..6, all three cell means are
        // i.i.d., so the base mean is the middle one with probability 1/3
        // at large n (an independent Monte Carlo puts it at 0.343 for
        // n = 200). The observed in-hull rate over many claims must sit in
        // a band around 1/3 — and nowhere near 1.
        let uniform = vec![1.0 / 6.0; 6];
        let spec = SyntheticSpec {
            groups: vec![
                GroupSpec {
                    name: "men".into(),
                    distribution: uniform.clone(),
                },
                GroupSpec {
                    name: "women".into(),
                    distribution: uniform,
                },
            ],
            true_mixture: vec![0.25, 0.75],
            claims: 120,
            n_per_cell: 200,
            seed: 77,
        };
        let data = generate_synthetic_topic(&spec).unwrap();
        let cfg = WeakTestConfig {
            bootstrap: BootstrapConfig::new(50, 1),
            ..WeakTestConfig::default()
        };
        let report = crate::consistency::weak_topic_test(&data, &cfg).unwrap();
        // 120 Bernoulli(~1/3) claims: SD ≈ 0.043, allow ±4 SD.
        assert!(
            (report.p_obs - 1.0 / 3.0).abs() < 0.18,
            "in-hull rate {} is not near 1/3",
            report.p_obs
        );
    }

    #[test]
    fn alignment_size_matches_nominal_alpha_at_unit_weights() {
        // Zero true gap: both groups share one distribution. With 2 labels
        // per cell the harmonic claim weight is exactly 1, where the
        // weighted SE reduces to the textbook one-sample t-test, so the
        // rejection rate must sit inside the 99% binomial envelope of
        // α = 0.05 over 500 runs: 0.05 ± 2.576·sqrt(0.05·0.95/500).
        let mut dist = vec![0.1; 6];
        dist[2] += 0.4;
        let spec = SyntheticSpec {
            groups: vec![
                GroupSpec {
                    name: "men".into(),
                    distribution: dist.clone(),
                },
                GroupSpec {
                    name: "women".into(),
                    distribution: dist,
                },
            ],
            true_mixture: vec![0.5, 0.5],
            claims: 15,
            n_per_cell: 2,
            seed: 321,
        };
        let test = CalibrationTest::Alignment(
            crate::alignment::AlignmentConfig::default(),
            crate::alignment::PriorDirection::ExpectNoDifference,
        );
        let summary = run_calibration(&spec, &test, 500).unwrap();
        let rate = summary.entries[0].rate;
        let half_width = 2.576 * (0.05f64 * 0.95 / 500.0).sqrt();
        assert!(
            (rate - 0.05).abs() <= half_width,
            "size {rate} outside 0.05 ± {half_width:.4}"
        );
    }

    #[test]
    fn wilson_interval_brackets_rate() {
        let (lo, hi) = wilson_interval(10, 100, 1.96);
        assert!(lo > 0.04 && lo < 0.1);
        assert!(hi > 0.1 && hi < 0.18);
        let (lo, hi) = wilson_interval(0, 50, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }
}
