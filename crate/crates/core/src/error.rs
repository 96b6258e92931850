use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot} is not positive)")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("gamma = {gamma:e} must lie in (0, 1/L_f) = (0, {limit:e})")]
    GammaTooLarge { gamma: f64, limit: f64 },

    #[error("gamma must be positive, got {0:e}")]
    NonpositiveGamma(f64),

    #[error("Lipschitz constant must be positive, got {0:e}")]
    NonpositiveLipschitz(f64),

    #[error("strong convexity (mu > 0) is required")]
    StronglyConvexRequired,

    #[error("stepsize lambda = {lambda:e} outside ({low:e}, {high:e}]")]
    LambdaOutOfRange { lambda: f64, low: f64, high: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("bad generator parameters: {0}")]
    BadParameters(String),

    #[error("could not build a dual certificate for the planted solution")]
    CertificateFailed,

    #[error("malformed matrix file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
