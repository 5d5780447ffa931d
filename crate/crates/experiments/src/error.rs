use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("oracle cap exceeded: {0}")]
    OracleCap(cart_core::Error),
    #[error(transparent)]
    Core(cart_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Process exit code: 2 for configuration problems, 3 when the problem
    /// exceeds the oracle's enumeration caps, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::OracleCap(_) => 3,
            _ => 1,
        }
    }
}

impl From<cart_core::Error> for ExperimentError {
    fn from(e: cart_core::Error) -> Self {
        use cart_core::Error as E;
        match e {
            E::CapExceeded { .. } => ExperimentError::OracleCap(e),
            E::InvalidDistribution(_)
            | E::InvalidTarget(_)
            | E::InvalidNoise(_)
            | E::InvalidPartition(_)
            | E::InvalidConfig(_)
            | E::DimensionMismatch { .. }
            | E::InsufficientSamples { .. } => ExperimentError::Config(e.to_string()),
            other => ExperimentError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
