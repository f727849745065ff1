use thiserror::Error;

use crate::channel::StreamKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("device list is empty")]
    EmptyDeviceList,
    #[error("device {device}: time offset {tau} outside [0, 1)")]
    OffsetOutOfRange { device: usize, tau: f64 },
    #[error("device {device}: {reason}")]
    InvalidProfile { device: usize, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("received signal power is zero; noise level cannot be calibrated to a finite EsN0")]
    ZeroSignalPower,
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch { what: &'static str, expected: usize, found: usize },
    #[error("expected a {expected:?} sample stream, found {found:?}")]
    WrongStreamKind { expected: StreamKind, found: StreamKind },
    #[error("zero noise level has no canonical-form evidence")]
    ZeroNoise,
    #[error("marginalization failed at window {window}: block not invertible even with ridge")]
    SingularMarginalization { window: usize },
    #[error("marginal for symbol index {index} is rank deficient (condition number {condition:e})")]
    RankDeficientMarginal { index: usize, condition: f64 },
    #[error("coefficient model is singular ({reason}, condition number {condition:e})")]
    SingularModel { condition: f64, reason: &'static str },
}
