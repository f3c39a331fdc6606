use thiserror::Error;

use crate::metric_space::PointId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NasError {
    #[error("point {0:?} is not in the space")]
    PointNotInSpace(PointId),
    #[error("invalid space description: {0}")]
    InvalidSpace(String),
    #[error("map {map} cannot act on {space}")]
    Incompatible { map: String, space: String },
    #[error("map {0} has no inverse")]
    NotInvertible(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("system has no finite cycle; truncate to a horizon first")]
    Aperiodic,
    #[error("operation requires a finite space, got {0}")]
    InfiniteSpace(String),
    #[error("pseudo-orbit construction failed: delta {delta} below the required minimum {required}")]
    DeltaTooSmall { delta: f64, required: f64 },
    #[error("no qualifying shadow point for the orbit of {point:?}: {detail}")]
    NoShadow { point: PointId, detail: String },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, NasError>;

impl From<std::io::Error> for NasError {
    fn from(e: std::io::Error) -> Self {
        NasError::Io(e.to_string())
    }
}
