use thiserror::Error;

/// Errors raised by the relaxation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The function family does not support the requested operation.
    #[error("capability error: {0}")]
    Capability(String),
    /// An iterative method failed to converge or a value overflowed.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Malformed input (length mismatch, unsorted lists, bad files).
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
