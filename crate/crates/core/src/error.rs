use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("basis element {index} is linearly dependent on the preceding elements")]
    DependentBasis { index: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    /// The constrained distance solver ran out of budget. The true value lies
    /// in `[lower, upper]`.
    #[error("solver failed after {iterations} iterations; value bracketed by [{lower}, {upper}]")]
    SolverFailure {
        lower: f64,
        upper: f64,
        iterations: usize,
    },

    #[error("map is not surjective: rank {rank}, need {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("epsilon-net needs about {required} points, cap is {cap}")]
    NetTooLarge { required: f64, cap: usize },

    /// The computation is refused because a required quantity is numerically
    /// indistinguishable from zero.
    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, Error>;
