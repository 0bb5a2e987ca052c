use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine could not reach its accuracy target within its work budget.
    #[error("numeric failure in {context}: achieved error {achieved:.3e}, target {target:.3e}")]
    NumericFailure {
        context: String,
        achieved: f64,
        target: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn is_numeric_failure(&self) -> bool {
        matches!(self, Error::NumericFailure { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
