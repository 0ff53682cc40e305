//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A parameter violated its documented domain (e.g. `k > m`, a
    /// non-positive rate, or an invalid horizon).
    #[error("invalid parameter: {0}")]
    Domain(String),

    /// A harmonic-number lookup beyond the cache capacity.
    #[error("harmonic index {index} exceeds cache capacity {max_index}")]
    Capacity { index: usize, max_index: usize },

    /// The closed-form age expressions are only defined for instantaneous
    /// downlink; finite downlink rates are simulation-only.
    #[error("the analytic age model requires instantaneous downlink")]
    FiniteDownlink,
}

pub type Result<T> = std::result::Result<T, Error>;
