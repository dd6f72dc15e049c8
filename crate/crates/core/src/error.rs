use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The requested operation is not defined for the given function kind.
    #[error("unsupported operation: {0}")]
    Capability(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("validation failed: {0}")]
    Validation(String),

    /// A diagnostic (stationary distribution, mixing coefficient) could not
    /// be computed for the given chain.
    #[error("diagnostic failed: {0}")]
    Diagnostic(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape { expected, found })
    }
}
