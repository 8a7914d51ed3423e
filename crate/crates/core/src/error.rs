use thiserror::Error;

/// Errors shared across the sampler and diagnostics modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite {what} at iteration {iteration}: {value}")]
    NonFinite {
        what: &'static str,
        iteration: usize,
        value: f64,
    },

    #[error("non-finite proposal log-density ratio {value}")]
    NonFiniteProposalRatio { value: f64 },

    #[error("Cholesky factorization failed even after jitter regularization")]
    CholeskyFailure,

    #[error("matrix is singular or not positive-definite: {context}")]
    SingularMatrix { context: &'static str },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("jump proposal has zero density at the current state (ergodicity violation)")]
    ZeroProposalDensity,

    #[error("kernel does not support state space {space}")]
    UnsupportedSpace { space: &'static str },

    #[error("pilot chain produced a degenerate reaction-coordinate range [{lo}, {hi}]")]
    DegeneratePilotRange { lo: f64, hi: f64 },

    #[error("gradient unavailable for this target")]
    MissingGradient,

    #[error("no optimization start converged to a mode")]
    NoModesFound,

    #[error("inner proposal budget of {budget} exhausted in {phase} phase")]
    BudgetExhausted { phase: &'static str, budget: usize },

    #[error("{0}")]
    Invalid(String),
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::Invalid(msg.into())
    }
}
