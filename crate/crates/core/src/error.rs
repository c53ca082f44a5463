use thiserror::Error;

/// Errors raised by the numerical kernels, models, objectives and optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is singular (pivot magnitude {pivot:e} at column {col})")]
    SingularMatrix { col: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFiniteValue(&'static str),

    #[error("point outside the model domain: {0}")]
    DomainViolation(String),

    #[error("alpha-divergence undefined: variance factor {factor} <= 0")]
    DivergenceUndefined { factor: f64 },

    #[error("moment vector is infeasible (inner Newton stopped at residual {residual:e})")]
    MomentInfeasible { residual: f64 },

    #[error("density underflows at every quadrature node")]
    QuadratureUnderflow,

    #[error("line search failed: {0}")]
    LineSearchFailure(String),

    #[error("need at least {needed} usable error values, found {found}")]
    InsufficientIterations { needed: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
