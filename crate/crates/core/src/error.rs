use thiserror::Error;

pub type Result<T> = std::result::Result<T, FasError>;

#[derive(Debug, Error)]
pub enum FasError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The grid has a single port, so the displacement-based formulas do not apply.
    #[error("degenerate port grid: {0}")]
    DegenerateGrid(String),

    /// Adaptive integration ran out of subdivisions. Carries the best estimate.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error_estimate:e}")]
    Convergence { estimate: f64, error_estimate: f64 },

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    /// The correlation model cannot be realised (e.g. covariance not PSD).
    #[error("model error: {0}")]
    Model(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FasError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FasError::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        FasError::Config(msg.into())
    }
}
