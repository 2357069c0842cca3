use thiserror::Error;

#[derive(Debug, Error)]
pub enum DmdError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("requested rank {requested} exceeds the {available} singular values above tolerance")]
    RankTooHigh { requested: usize, available: usize },

    #[error("integration produced a non-finite state at step {step}")]
    IntegrationOverflow { step: usize },

    #[error("parse error: {0}")]
    ParseError(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DmdError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(DmdError::InvalidInput(msg.into()))
}
