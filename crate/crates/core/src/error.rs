use thiserror::Error;

/// Errors raised by the analysis kernels, the simulator and scenario handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("node index {index} out of range 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },

    /// One or more nodes have utilization at or above one (1-based indices).
    #[error("unstable configuration: nodes {0:?} have utilization >= 1")]
    Unstable(Vec<usize>),

    #[error("end-to-end success probability is zero")]
    ZeroSuccess,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid rate set: {0}")]
    InvalidRates(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
