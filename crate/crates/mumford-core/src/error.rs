use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// Input is well formed but outside what the computation certifies.
    #[error("refused: {0}")]
    Refusal(String),
    /// Finite window was too small to certify a periodic computation.
    #[error("window certification failed: {0}")]
    Window(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
