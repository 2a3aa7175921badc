//! Simplex-constrained least squares for the mixture weight.
//!
//! `estimate_q_star` minimizes `(Σ_g q_g·μ_g − μ_base)²` over the
//! probability simplex. The minimizer set is rarely unique (never, for more
//! than two groups), so among exact minimizers we return the one closest to
//! a reference weight `q0` in L1 distance.
//!
//! Both stages have closed-form solutions. The reconstruction `q·μ` can
//! reach exactly `clamp(μ_base, min μ, max μ)`, no closer, which fixes the
//! optimal residual. Reaching that value from `q0` at minimal L1 cost is a
//! transport problem on the line: total L1 movement is twice the mass moved,
//! and moving mass between the currently most extreme means changes the
//! reconstruction fastest per unit mass. Draining sources in order of
//! effectiveness into the single best destination is therefore exactly
//! optimal, and the result is the minimizer with smallest `‖q − q0‖₁`.

/// L1 distance between two weight vectors.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Squared reconstruction error `(q·μ − μ_base)²`.
pub fn reconstruction_residual(q: &[f64], group_means: &[f64], mu_base: f64) -> f64 {
    let dot: f64 = q.iter().zip(group_means).map(|(w, m)| w * m).sum();
    (dot - mu_base) * (dot - mu_base)
}

/// Minimize `(Σ q_g μ_g − μ_base)²` over the simplex; among minimizers,
/// return the one with smallest L1 distance to `q0`.
///
/// For two groups with distinct means this equals the closed-form implied
/// weight clipped to [0, 1].
pub fn estimate_q_star(group_means: &[f64], mu_base: f64, q0: &[f64]) -> Vec<f64> {
    assert!(group_means.len() >= 2, "need at least two groups");
    assert_eq!(group_means.len(), q0.len(), "q0 length must match groups");

    let lo = group_means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = group_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let target = mu_base.clamp(lo, hi);

    let mut q: Vec<f64> = q0.to_vec();
    let mut dot: f64 = q.iter().zip(group_means).map(|(w, m)| w * m).sum();

    // Index order by mean value; ties keep group order.
    let mut order: Vec<usize> = (0..group_means.len()).collect();
    order.sort_by(|&a, &b| group_means[a].partial_cmp(&group_means[b]).unwrap());

    if dot < target {
        // Move mass into the largest-mean group, draining small means first.
        let dest = *order.last().unwrap();
        for &src in &order {
            let gain = group_means[dest] - group_means[src];
            if gain <= 1e-15 || q[src] <= 0.0 {
                continue;
            }
            let need = target - dot;
            if need <= 0.0 {
                break;
            }
            let full = gain * q[src];
            if full <= need {
                q[dest] += q[src];
                dot += full;
                q[src] = 0.0;
            } else {
                let x = need / gain;
                q[src] -= x;
                q[dest] += x;
                break;
            }
        }
    } else if dot > target {
        // Symmetric: into the smallest-mean group, draining large means first.
        let dest = order[0];
        for &src in order.iter().rev() {
            let drop = group_means[src] - group_means[dest];
            if drop <= 1e-15 || q[src] <= 0.0 {
                continue;
            }
            let need = dot - target;
            if need <= 0.0 {
                break;
            }
            let full = drop * q[src];
            if full <= need {
                q[dest] += q[src];
                dot -= full;
                q[src] = 0.0;
            } else {
                let x = need / drop;
                q[src] -= x;
                q[dest] += x;
                break;
            }
        }
    }

    for w in &mut q {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_simplex(q: &[f64]) {
        assert!(q.iter().all(|&w| w >= 0.0));
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9, "sum {:?}", q);
    }

    #[test]
    fn interior_two_group_solution() {
        for q0 in [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.3, 0.7]] {
            let q = estimate_q_star(&[2.0, 4.0], 3.0, &q0);
            assert_simplex(&q);
            assert!((q[0] - 0.5).abs() < 1e-12 && (q[1] - 0.5).abs() < 1e-12, "{q:?}");
            assert!(reconstruction_residual(&q, &[2.0, 4.0], 3.0) < 1e-24);
        }
    }

    #[test]
    fn boundary_projection() {
        for q0 in [[1.0, 0.0], [0.5, 0.5]] {
            let q = estimate_q_star(&[2.0, 4.0], 5.0, &q0);
            assert_simplex(&q);
            assert!((q[0]).abs() < 1e-12 && (q[1] - 1.0).abs() < 1e-12);
            assert!((reconstruction_residual(&q, &[2.0, 4.0], 5.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_group_tie_break_is_l1_minimal() {
        let q = estimate_q_star(&[1.0, 3.0, 5.0], 3.0, &[1.0, 0.0, 0.0]);
        assert_simplex(&q);
        assert!((q[0] - 0.5).abs() < 1e-12);
        assert!(q[1].abs() < 1e-12);
        assert!((q[2] - 0.5).abs() < 1e-12);
        assert!((l1_distance(&q, &[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!(reconstruction_residual(&q, &[1.0, 3.0, 5.0], 3.0) < 1e-18);
    }

    #[test]
    fn q0_already_optimal_is_returned() {
        let q0 = [0.2, 0.5, 0.3];
        let means = [2.0, 3.0, 4.0];
        let base: f64 = q0.iter().zip(&means).map(|(w, m)| w * m).sum();
        let q = estimate_q_star(&means, base, &q0);
        assert!(l1_distance(&q, &q0) < 1e-12);
    }

    #[test]
    fn degenerate_equal_means_return_q0() {
        let q0 = [0.25, 0.75];
        let q = estimate_q_star(&[3.0, 3.0], 5.0, &q0);
        assert_eq!(q, q0.to_vec());
    }

    #[test]
    fn matches_closed_form_for_two_distinct_groups() {
        let cases = [
            (2.0, 4.0, 2.6),
            (5.0, 1.5, 4.0),
            (1.0, 6.0, 0.7),
            (4.0, 2.0, 6.0),
        ];
        for (m1, m2, base) in cases {
            let q = estimate_q_star(&[m1, m2], base, &[0.5, 0.5]);
            let closed = ((base - m2) / (m1 - m2)).clamp(0.0, 1.0);
            assert!((q[0] - closed).abs() < 1e-12, "{m1} {m2} {base}: {q:?}");
            assert!((q[1] - (1.0 - closed)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_not_worse_than_vertices_or_q0() {
        // Deterministic pseudo-random sweep over group sizes 2..=4.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let k = 2 + (next() * 3.0) as usize % 3;
            let means: Vec<f64> = (0..k).map(|_| 1.0 + 5.0 * next()).collect();
            let base = 1.0 + 5.0 * next();
            let mut q0: Vec<f64> = (0..k).map(|_| next()).collect();
            let s: f64 = q0.iter().sum();
            q0.iter_mut().for_each(|w| *w /= s);

            let q = estimate_q_star(&means, base, &q0);
            assert_simplex(&q);
            let r = reconstruction_residual(&q, &means, base);
            assert!(r <= reconstruction_residual(&q0, &means, base) + 1e-12);
            for v in 0..k {
                let mut vertex = vec![0.0; k];
                vertex[v] = 1.0;
                assert!(r <= reconstruction_residual(&vertex, &means, base) + 1e-12);
            }
            let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if base >= lo && base <= hi {
                assert!(r < 1e-18, "in-hull base must reconstruct exactly, r={r}");
            }
        }
    }
}
