//! Logical-consistency tests: does the average-conditioned opinion behave
//! like a convex combination of the group-conditioned opinions?

mod simplex;
mod strong;
mod weak;

pub use simplex::{estimate_q_star, l1_distance, reconstruction_residual};
pub use strong::{
    mixture_allocation, scalar_grid, simplex_grid, strong_topic_test, synthetic_base_sample,
    two_group_grid, Q0Result, StrongTestConfig, StrongTestReport,
};
pub use weak::{
    hull_indicator, implied_mixture_weight, weak_topic_test, MixtureWeight, ThresholdResult,
    WeakClaimResult, WeakTestConfig, WeakTestReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("invalid test configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset has no base condition cells; consistency tests need them")]
    MissingBase,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}
