use alloc::string::String;

/// Errors raised by the localization pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("out of bounds: {0}")]
    Bounds(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("undefined score: {0}")]
    UndefinedScore(String),
    #[error("tracker used before initialization")]
    Uninitialized,
    #[error("training error: {0}")]
    Training(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("invalid render spec: {0}")]
    Spec(String),
}

pub type Result<T> = core::result::Result<T, Error>;
