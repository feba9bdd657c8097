use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("rmse is only defined when counts match (estimated {estimated}, truth {truth})")]
    CountMismatch { estimated: usize, truth: usize },

    #[error("index {index} out of range {min}..={max}")]
    IndexOutOfRange {
        index: usize,
        min: usize,
        max: usize,
    },

    #[error("interval geometry: {0}")]
    Geometry(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("invalid signal spec: {0}")]
    Spec(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
