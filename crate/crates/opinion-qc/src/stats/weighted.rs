//! Weighted mean, standard error, and degrees of freedom for the alignment
//! t-test.

use super::StatsError;

/// Result of [`weighted_mean_se`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightedStats {
    pub mean: f64,
    pub se: f64,
    /// Degrees of freedom ν = Σw_i − 1.
    pub dof: f64,
}

/// Weighted mean ḡ = Σw·g / Σw, its standard error
/// SE = sqrt(Σw(g−ḡ)² / ((Σw−1)·Σw)), and ν = Σw − 1.
pub fn weighted_mean_se(values: &[f64], weights: &[f64]) -> Result<WeightedStats, StatsError> {
    if values.len() != weights.len() {
        return Err(StatsError::LengthMismatch {
            values: values.len(),
            weights: weights.len(),
        });
    }
    if values.len() < 2 {
        return Err(StatsError::TooFewObservations(values.len()));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w > 0.0) {
            return Err(StatsError::NonPositiveWeight(w, i));
        }
    }
    let w_sum: f64 = weights.iter().sum();
    if w_sum <= 1.0 {
        return Err(StatsError::InsufficientWeight(w_sum));
    }
    let mean = values
        .iter()
        .zip(weights)
        .map(|(g, w)| g * w)
        .sum::<f64>()
        / w_sum;
    let ss: f64 = values
        .iter()
        .zip(weights)
        .map(|(g, w)| w * (g - mean) * (g - mean))
        .sum();
    let se = (ss / ((w_sum - 1.0) * w_sum)).sqrt();
    Ok(WeightedStats {
        mean,
        se,
        dof: w_sum - 1.0,
    })
}
