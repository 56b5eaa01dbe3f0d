use thiserror::Error;

/// Errors raised by the library.
///
/// Validation failures and numerical-budget failures are kept apart so that
/// front-ends can map them to different exit statuses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectral measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A truncation or quadrature budget could not be met.
    #[error("numerical budget exceeded: {0}")]
    Budget(String),

    /// The fractional-operator integral does not converge for this input.
    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of numerical budgets rather than of input validation.
    pub fn is_budget_failure(&self) -> bool {
        matches!(self, Error::Budget(_) | Error::Divergent(_))
    }

    /// Short machine-readable tag.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Budget(_) => "budget_exceeded",
            Error::Divergent(_) => "divergent_integral",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
