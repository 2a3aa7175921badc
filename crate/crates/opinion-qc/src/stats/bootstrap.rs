//! Resampling primitives shared by the consistency tests.

use rand::Rng;

use super::{RngStream, StatsError};

/// Replicate count and master seed for a bootstrap run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates B.
    pub replicates: usize,
    /// Master seed all streams are derived from.
    pub master_seed: u64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, master_seed: u64) -> Self {
        Self {
            replicates,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.replicates == 0 {
            return Err(StatsError::TooFewObservations(0));
        }
        Ok(())
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 10_000,
            master_seed: 0,
        }
    }
}

/// Mean of `labels.len()` draws with replacement from `labels`.
pub fn resample_mean(labels: &[u8], rng: &mut RngStream) -> Result<f64, StatsError> {
    if labels.is_empty() {
        return Err(StatsError::EmptyLabels);
    }
    let n = labels.len();
    let mut sum: u64 = 0;
    for _ in 0..n {
        sum += u64::from(labels[rng.random_range(0..n)]);
    }
    Ok(sum as f64 / n as f64)
}
