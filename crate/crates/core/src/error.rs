use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A combinatorial space would exceed the configured cap.
    #[error("space of {size} elements exceeds the cap of {cap}")]
    TooLarge { size: u128, cap: u128 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A quantity is mathematically undefined for the given inputs.
    #[error("undefined result: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
