//! Deterministic randomness, bootstrap primitives, and the statistics shared
//! by every test: Student-t tail probabilities and weighted means.

mod bootstrap;
mod rng;
mod special;
mod weighted;

pub use bootstrap::{resample_mean, BootstrapConfig};
pub use rng::{derive_rng, RngStream};
pub use special::{ln_gamma, regularized_incomplete_beta, student_t_cdf, student_t_two_sided_p};
pub use weighted::{weighted_mean_se, WeightedStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("cannot resample an empty label vector")]
    EmptyLabels,
    #[error("degrees of freedom must be positive, got {0}")]
    NonPositiveDof(f64),
    #[error("statistic must be finite, got {0}")]
    NonFiniteStatistic(f64),
    #[error("values and weights differ in length: {values} vs {weights}")]
    LengthMismatch { values: usize, weights: usize },
    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),
    #[error("weights must be strictly positive, got {0} at index {1}")]
    NonPositiveWeight(f64, usize),
    #[error("weights must sum to more than 1 (got {0}), degrees of freedom would be nonpositive")]
    InsufficientWeight(f64),
    #[error("incomplete beta argument out of domain: a={a}, b={b}, x={x}")]
    BetaDomain { a: f64, b: f64, x: f64 },
    #[error("incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")]
    BetaNoConvergence { a: f64, b: f64, x: f64 },
}
