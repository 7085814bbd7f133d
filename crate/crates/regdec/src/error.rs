use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A partition constraint was violated (empty block, size mismatch, ...).
    #[error("invalid partition: {0}")]
    Partition(String),

    /// A model specification failed validation.
    #[error("invalid model spec: {0}")]
    Spec(String),

    /// Malformed input data; carries a 1-based line or cell reference.
    #[error("data error at {location}: {message}")]
    Data { location: String, message: String },

    /// Every restart of a search was abandoned.
    #[error("search failed: {0}")]
    Search(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn partition(msg: impl Into<String>) -> Self {
        Error::Partition(msg.into())
    }

    pub fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }

    pub fn data(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            location: location.into(),
            message: message.into(),
        }
    }
}
