use thiserror::Error;

pub type Result<T> = std::result::Result<T, FeelError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeelError {
    #[error("expected at least {expected} symbols, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("need {needed} examples, dataset has {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("round {round}, packet {packet}: {source}")]
    Channel { round: usize, packet: usize, source: moac_core::Error },
}
