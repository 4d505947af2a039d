use thiserror::Error;

/// Errors raised by the estimators and their numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn invalid_config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
