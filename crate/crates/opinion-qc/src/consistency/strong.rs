//! Strong logical-consistency test.
//!
//! Asks whether one fixed mixture weight vector q₀ reconstructs the
//! average-conditioned opinion across *all* claims of a topic. The null
//! draws synthetic average-conditioned responses from the q₀-mixture of the
//! observed group label distributions and compares mean L1 deviations of the
//! estimated weights.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ClaimCell, TopicDataset, BASE_CONDITION};
use crate::stats::{derive_rng, resample_mean, BootstrapConfig, RngStream};

use super::simplex::{estimate_q_star, l1_distance};
use super::ConsistencyError;

/// Candidate grid, per-test level, and bootstrap settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrongTestConfig {
    /// Candidate weight vectors, each on the simplex over the dataset's
    /// groups. For two groups the conventional grid is
    /// [`two_group_grid`]`(0.05)`.
    pub grid: Vec<Vec<f64>>,
    /// Bonferroni-corrected per-test level α*.
    pub alpha_star: f64,
    pub bootstrap: BootstrapConfig,
    pub eps: f64,
}

impl StrongTestConfig {
    pub fn with_seed(master_seed: u64) -> Self {
        Self {
            bootstrap: BootstrapConfig::new(10_000, master_seed),
            ..Self::default()
        }
    }

    pub fn validate(&self, n_groups: usize) -> Result<(), ConsistencyError> {
        if self.grid.is_empty() {
            return Err(ConsistencyError::InvalidConfig("empty q0 grid".into()));
        }
        for q0 in &self.grid {
            if q0.len() != n_groups {
                return Err(ConsistencyError::InvalidConfig(format!(
                    "q0 {q0:?} has {} components but the dataset has {n_groups} groups",
                    q0.len()
                )));
            }
            if q0.iter().any(|&w| w < -1e-12) {
                return Err(ConsistencyError::InvalidConfig(format!(
                    "q0 {q0:?} has a negative component"
                )));
            }
            let sum: f64 = q0.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(ConsistencyError::InvalidConfig(format!(
                    "q0 {q0:?} sums to {sum}, not 1"
                )));
            }
        }
        if !(self.alpha_star > 0.0 && self.alpha_star < 1.0) {
            return Err(ConsistencyError::InvalidConfig(format!(
                "alpha_star={} outside (0, 1)",
                self.alpha_star
            )));
        }
        self.bootstrap.validate()?;
        Ok(())
    }
}

impl Default for StrongTestConfig {
    fn default() -> Self {
        Self {
            grid: two_group_grid(0.05),
            alpha_star: 0.0025,
            bootstrap: BootstrapConfig::default(),
            eps: 1e-9,
        }
    }
}

/// Evenly spaced scalar grid over [0, 1] including both endpoints.
/// `scalar_grid(0.05)` has 21 points.
pub fn scalar_grid(step: f64) -> Vec<f64> {
    assert!(step > 0.0 && step <= 1.0, "step must be in (0, 1]");
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Scalar grid mapped to two-group weight vectors (q₀, 1 − q₀).
pub fn two_group_grid(step: f64) -> Vec<Vec<f64>> {
    scalar_grid(step)
        .into_iter()
        .map(|q| vec![q, 1.0 - q])
        .collect()
}

/// All lattice points of the (k−1)-simplex with coordinates that are
/// multiples of `step`.
pub fn simplex_grid(k: usize, step: f64) -> Vec<Vec<f64>> {
    assert!(k >= 2);
    let n = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    let mut counts = vec![0usize; k];
    fn rec(slot: usize, remaining: usize, n: usize, counts: &mut [usize], out: &mut Vec<Vec<f64>>) {
        if slot == counts.len() - 1 {
            counts[slot] = remaining;
            out.push(counts.iter().map(|&c| c as f64 / n as f64).collect());
            return;
        }
        for c in 0..=remaining {
            counts[slot] = c;
            rec(slot + 1, remaining - c, n, counts, out);
        }
    }
    rec(0, n, n, &mut counts, &mut out);
    out
}

/// Per-group draw counts: ⌊q₀_g·n_tot⌋ plus largest-remainder extras,
/// remainder ties broken by group order.
pub fn mixture_allocation(q0: &[f64], n_tot: usize) -> Vec<usize> {
    let mut counts = Vec::with_capacity(q0.len());
    let mut fracs = Vec::with_capacity(q0.len());
    let mut assigned = 0usize;
    for &w in q0 {
        let x = w * n_tot as f64;
        // Snap float noise at integer boundaries so ⌊·⌋ matches exact
        // arithmetic (0.7 × 10 must floor to 7, not 6).
        let x = if (x - x.round()).abs() < 1e-9 { x.round() } else { x };
        let f = x.floor();
        counts.push(f as usize);
        fracs.push(x - f);
        assigned += f as usize;
    }
    let mut order: Vec<usize> = (0..q0.len()).collect();
    order.sort_by(|&a, &b| fracs[b].partial_cmp(&fracs[a]).unwrap().then(a.cmp(&b)));
    for &g in order.iter().take(n_tot.saturating_sub(assigned)) {
        counts[g] += 1;
    }
    counts
}

fn draw_mixture<F: FnMut(u8)>(
    cells: &[&[u8]],
    counts: &[usize],
    rng: &mut RngStream,
    mut sink: F,
) {
    for (labels, &c) in cells.iter().zip(counts) {
        if c == 0 {
            continue;
        }
        assert!(!labels.is_empty(), "sampled group cell must be nonempty");
        for _ in 0..c {
            sink(labels[rng.random_range(0..labels.len())]);
        }
    }
}

/// Draw a synthetic average-conditioned sample of length `n_tot` from the
/// q₀-mixture of the group cells, with replacement within each group.
pub fn synthetic_base_sample(
    cells: &[&ClaimCell],
    q0: &[f64],
    n_tot: usize,
    rng: &mut RngStream,
) -> Vec<u8> {
    assert!(n_tot >= 1);
    assert_eq!(cells.len(), q0.len());
    let counts = mixture_allocation(q0, n_tot);
    let labels: Vec<&[u8]> = cells.iter().map(|c| c.labels.as_slice()).collect();
    let mut out = Vec::with_capacity(n_tot);
    draw_mixture(&labels, &counts, rng, |l| out.push(l));
    out
}

/// Decision for one candidate weight vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Q0Result {
    pub q0: Vec<f64>,
    /// Observed L̂(q₀): mean over claims of ‖q̂_obs − q₀‖₁.
    pub l_obs: f64,
    /// (1/B)·#{b : L̂⁽ᵇ⁾ ≥ L̂_obs}.
    pub p_value: f64,
    pub reject: bool,
    /// Observed per-claim weight estimates (tie-broken toward this q₀),
    /// in claim order.
    pub claim_q_hats: Vec<Vec<f64>>,
}

/// Strong-test outcome for one topic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongTestReport {
    pub topic: String,
    pub groups: Vec<String>,
    pub n_claims: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub alpha_star: f64,
    pub results: Vec<Q0Result>,
}

impl StrongTestReport {
    /// Weight vectors not rejected.
    pub fn feasible_weights(&self) -> Vec<Vec<f64>> {
        self.results
            .iter()
            .filter(|r| !r.reject)
            .map(|r| r.q0.clone())
            .collect()
    }

    /// For a two-group run, the feasible grid as scalars q₀ (first
    /// component). `None` when the dataset has more than two groups.
    pub fn feasible_scalars(&self) -> Option<Vec<f64>> {
        if self.groups.len() != 2 {
            return None;
        }
        Some(self.results.iter().filter(|r| !r.reject).map(|r| r.q0[0]).collect())
    }

    /// The full scalar grid, for interval rendering.
    pub fn scalar_grid(&self) -> Option<Vec<f64>> {
        if self.groups.len() != 2 {
            return None;
        }
        Some(self.results.iter().map(|r| r.q0[0]).collect())
    }
}

struct ClaimData<'a> {
    group_labels: Vec<&'a [u8]>,
    group_means: Vec<f64>,
    base_mean: f64,
    n_tot: usize,
}

fn q0_label(q0: &[f64]) -> String {
    let parts: Vec<String> = q0.iter().map(|w| format!("{w:?}")).collect();
    parts.join(",")
}

/// Run the strong logical-consistency test on one topic.
pub fn strong_topic_test(
    data: &TopicDataset,
    cfg: &StrongTestConfig,
) -> Result<StrongTestReport, ConsistencyError> {
    cfg.validate(data.groups().len())?;
    if !data.has_base() {
        return Err(ConsistencyError::MissingBase);
    }

    let groups = data.groups();
    let topic = data.topic();
    let seed = cfg.bootstrap.master_seed;
    let b_total = cfg.bootstrap.replicates;
    let n_groups = groups.len();

    let claim_ids: Vec<&str> = data.claim_ids().collect();
    let mut claims = Vec::with_capacity(claim_ids.len());
    for claim_id in &claim_ids {
        let mut group_labels = Vec::with_capacity(n_groups);
        let mut group_means = Vec::with_capacity(n_groups);
        for g in groups {
            let cell = data.cell(claim_id, g)?;
            group_labels.push(cell.labels.as_slice());
            group_means.push(cell.mean());
        }
        let base = data.cell(claim_id, BASE_CONDITION)?;
        claims.push(ClaimData {
            group_labels,
            group_means,
            base_mean: base.mean(),
            n_tot: base.len(),
        });
    }
    let n_claims = claims.len();

    let mut results = Vec::with_capacity(cfg.grid.len());
    for q0 in &cfg.grid {
        let label = q0_label(q0);

        // Observed pass: sample means, no resampling.
        let claim_q_hats: Vec<Vec<f64>> = claims
            .iter()
            .map(|c| estimate_q_star(&c.group_means, c.base_mean, q0))
            .collect();
        let l_obs = claim_q_hats
            .iter()
            .map(|q| l1_distance(q, q0))
            .sum::<f64>()
            / n_claims as f64;

        // One root stream per (claim, cell); replicates use substreams.
        let mut group_streams: Vec<Vec<RngStream>> = Vec::with_capacity(n_claims);
        let mut synth_streams: Vec<RngStream> = Vec::with_capacity(n_claims);
        let mut allocations: Vec<Vec<usize>> = Vec::with_capacity(n_claims);
        for (claim_id, claim) in claim_ids.iter().zip(&claims) {
            group_streams.push(
                groups
                    .iter()
                    .map(|g| derive_rng(seed, &["qc1-strong", topic, &label, claim_id, g]))
                    .collect(),
            );
            synth_streams.push(derive_rng(
                seed,
                &["qc1-strong", topic, &label, claim_id, "synthetic-base"],
            ));
            allocations.push(mixture_allocation(q0, claim.n_tot));
        }

        let boot_l: Vec<f64> = (0..b_total as u64)
            .into_par_iter()
            .map(|b| {
                let mut means = vec![0.0; n_groups];
                let mut total = 0.0;
                for ((claim, streams), (synth, counts)) in claims
                    .iter()
                    .zip(&group_streams)
                    .zip(synth_streams.iter().zip(&allocations))
                {
                    for (slot, (labels, stream)) in means
                        .iter_mut()
                        .zip(claim.group_labels.iter().zip(streams))
                    {
                        *slot =
                            resample_mean(labels, &mut stream.substream(b)).expect("nonempty");
                    }
                    let mut sum = 0u64;
                    draw_mixture(&claim.group_labels, counts, &mut synth.substream(b), |l| {
                        sum += u64::from(l)
                    });
                    let base_mean = sum as f64 / claim.n_tot as f64;
                    let q_hat = estimate_q_star(&means, base_mean, q0);
                    total += l1_distance(&q_hat, q0);
                }
                total / n_claims as f64
            })
            .collect();

        let p_value = boot_l.iter().filter(|&&l| l >= l_obs).count() as f64 / b_total as f64;
        results.push(Q0Result {
            q0: q0.clone(),
            l_obs,
            p_value,
            reject: p_value < cfg.alpha_star,
            claim_q_hats,
        });
    }

    Ok(StrongTestReport {
        topic: topic.to_string(),
        groups: groups.to_vec(),
        n_claims,
        replicates: b_total,
        master_seed: seed,
        alpha_star: cfg.alpha_star,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_topic_dataset, AnnotationRecord, Source, Veracity};

    fn constant_claim(men: u8, women: u8, base: u8, n: usize) -> TopicDataset {
        let mut recs = Vec::new();
        for (cond, label) in [("man", men), ("woman", women), ("base", base)] {
            for i in 0..n {
                recs.push(AnnotationRecord {
                    claim_id: "c1".into(),
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
        build_topic_dataset(&recs, "T", &["man", "woman", "base"], 2)
            .unwrap()
            .0
    }

    #[test]
    fn scalar_grid_has_21_points_at_0_05() {
        let grid = scalar_grid(0.05);
        assert_eq!(grid.len(), 21);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[1], 0.05);
        assert_eq!(grid[14], 0.7);
        assert_eq!(grid[20], 1.0);
    }

    #[test]
    fn simplex_grid_counts_and_membership() {
        let grid = simplex_grid(3, 0.25);
        // Compositions of 4 into 3 parts: C(6,2) = 15.
        assert_eq!(grid.len(), 15);
        for q in &grid {
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(q.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn allocation_matches_exact_largest_remainder() {
        // Independent integer-arithmetic oracle for q0 = (1/3, 1/3, 1/3):
        // every group floors to ⌊n/3⌋ with equal remainders, so the
        // n mod 3 extras go to the first groups in order.
        let third = 1.0 / 3.0;
        for n_tot in 1..=30usize {
            let counts = mixture_allocation(&[third, third, third], n_tot);
            let base = n_tot / 3;
            let extra = n_tot % 3;
            let expect: Vec<usize> = (0..3).map(|g| base + usize::from(g < extra)).collect();
            assert_eq!(counts, expect, "n_tot={n_tot}");
            assert_eq!(counts.iter().sum::<usize>(), n_tot);
        }
        assert_eq!(mixture_allocation(&[third, third, third], 10), vec![4, 3, 3]);
    }

    #[test]
    fn allocation_handles_boundaries_exactly() {
        assert_eq!(mixture_allocation(&[1.0, 0.0], 5), vec![5, 0]);
        assert_eq!(mixture_allocation(&[0.5, 0.5], 4), vec![2, 2]);
        assert_eq!(mixture_allocation(&[0.7, 0.3], 10), vec![7, 3]);
        assert_eq!(mixture_allocation(&[0.05, 0.95], 10), vec![1, 9]);
        // 0.55·10 floors to 5, 0.45·10 floors to 4; the extra goes to the
        // larger remainder (group 1's 0.5 beats group 0's 0.5 only on order).
        assert_eq!(mixture_allocation(&[0.55, 0.45], 10), vec![6, 4]);
    }

    #[test]
    fn synthetic_sample_respects_allocation() {
        let data = constant_claim(2, 4, 3, 4);
        let man = data.cell("c1", "man").unwrap();
        let woman = data.cell("c1", "woman").unwrap();

        let mut rng = derive_rng(1, &["synthetic", "test"]);
        let sample = synthetic_base_sample(&[man, woman], &[1.0, 0.0], 5, &mut rng);
        assert_eq!(sample, vec![2, 2, 2, 2, 2]);

        let sample = synthetic_base_sample(&[man, woman], &[0.5, 0.5], 4, &mut rng);
        assert_eq!(sample.iter().filter(|&&l| l == 2).count(), 2);
        assert_eq!(sample.iter().filter(|&&l| l == 4).count(), 2);
        assert_eq!(sample.len(), 4);
        let mean = sample.iter().map(|&l| f64::from(l)).sum::<f64>() / 4.0;
        assert_eq!(mean, 3.0);
    }

    #[test]
    fn deterministic_cells_give_exact_p_values() {
        let data = constant_claim(2, 4, 3, 10);
        let cfg = StrongTestConfig {
            grid: vec![vec![0.5, 0.5], vec![0.0, 1.0]],
            bootstrap: BootstrapConfig::new(300, 9),
            ..StrongTestConfig::default()
        };
        let report = strong_topic_test(&data, &cfg).unwrap();

        // q0 = 0.5: observed q̂ = 0.5, every replicate reconstructs exactly.
        let at_half = &report.results[0];
        assert_eq!(at_half.l_obs, 0.0);
        assert_eq!(at_half.p_value, 1.0);
        assert!(!at_half.reject);
        assert_eq!(at_half.claim_q_hats[0], vec![0.5, 0.5]);

        // q0 = 0: synthetic base comes from women only, so q̂_b = 0 and
        // L̂⁽ᵇ⁾ = 0 < L̂_obs; nothing reaches the observed deviation.
        let at_zero = &report.results[1];
        assert_eq!(at_zero.l_obs, 1.0);
        assert_eq!(at_zero.p_value, 0.0);
        assert!(at_zero.reject);

        assert_eq!(report.feasible_scalars().unwrap(), vec![0.5]);
    }

    #[test]
    fn three_group_test_runs_on_the_simplex() {
        let mut recs = Vec::new();
        for (cond, label) in [("man", 2u8), ("woman", 4), ("nonbinary", 6), ("base", 4)] {
            for i in 0..9 {
                recs.push(AnnotationRecord {
                    claim_id: "c1".into(),
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
        let (data, _) =
            build_topic_dataset(&recs, "T", &["man", "nonbinary", "woman", "base"], 2).unwrap();
        assert_eq!(data.groups().len(), 3);

        let third = 1.0 / 3.0;
        let cfg = StrongTestConfig {
            grid: vec![vec![0.0, 0.0, 1.0], vec![third, third, third]],
            bootstrap: BootstrapConfig::new(200, 4),
            ..StrongTestConfig::default()
        };
        let report = strong_topic_test(&data, &cfg).unwrap();
        // groups sorted: [man, nonbinary, woman] with means (2, 6, 4);
        // base mean 4 is reconstructed exactly by (0, 0, 1).
        let exact = &report.results[0];
        assert_eq!(exact.l_obs, 0.0);
        assert_eq!(exact.p_value, 1.0);
        assert!(!exact.reject);
        assert_eq!(exact.claim_q_hats[0], vec![0.0, 0.0, 1.0]);
        // At the uniform q0 the observed weights reconstruct too (base in
        // hull), so L̂_obs > 0 only via tie-breaking; p stays well above α*.
        let uniform = &report.results[1];
        assert!(!uniform.reject);
        assert!(report.scalar_grid().is_none());
        assert_eq!(report.feasible_weights().len(), 2);
    }

    #[test]
    fn feasible_set_is_subset_of_grid() {
        let data = constant_claim(2, 4, 3, 10);
        let cfg = StrongTestConfig {
            bootstrap: BootstrapConfig::new(200, 2),
            ..StrongTestConfig::default()
        };
        let report = strong_topic_test(&data, &cfg).unwrap();
        assert_eq!(report.results.len(), 21);
        let grid: Vec<Vec<f64>> = report.results.iter().map(|r| r.q0.clone()).collect();
        for q in report.feasible_weights() {
            assert!(grid.contains(&q));
        }
        for r in &report.results {
            assert!(r.p_value >= 0.0 && r.p_value <= 1.0);
            assert!(r.l_obs >= 0.0);
        }
    }

    #[test]
    fn reports_identical_across_thread_counts() {
        let data = constant_claim(2, 4, 3, 6);
        let cfg = StrongTestConfig {
            grid: two_group_grid(0.25),
            bootstrap: BootstrapConfig::new(500, 77),
            ..StrongTestConfig::default()
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| strong_topic_test(&data, &cfg).unwrap())
        };
        let single = serde_json::to_vec(&run(1)).unwrap();
        let multi = serde_json::to_vec(&run(8)).unwrap();
        assert_eq!(single, multi);
    }
}
