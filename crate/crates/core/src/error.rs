use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("exchangeability violated: {0}")]
    NotExchangeable(String),

    #[error("{matrix} is numerically singular at t={t} (condition number {cond:.3e})")]
    SingularFactor { matrix: String, t: usize, cond: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("assumption {id} does not hold: {detail}")]
    AssumptionFailed { id: String, detail: String },

    #[error("stacked problem size {size} exceeds cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("spectral condition fails: gamma * rho^2 = {value:.6} >= 1; the no-sharing error system diverges and can destabilize the game")]
    SpectralDivergence { value: f64 },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("numeric instability: {0}")]
    Unstable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
