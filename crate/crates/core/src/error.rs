use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("need at least {required} samples, got {actual}")]
    InsufficientSamples { required: usize, actual: usize },

    #[error("invalid feature distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid cell or partition: {0}")]
    InvalidPartition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("enumeration cap exceeded: {what} needs {needed} coordinates, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("cell has zero probability mass")]
    ZeroMassCell,

    #[error("cell contains no samples")]
    EmptyCell,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
