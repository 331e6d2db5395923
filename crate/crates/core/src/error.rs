use thiserror::Error;

/// Errors raised across the analysis and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid transfer function: {0}")]
    InvalidTf(String),

    #[error("transfer function has a pole at the origin (infinite DC gain)")]
    InfiniteDcGain,

    #[error("discretization failed: {0}")]
    Discretization(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed incidence matrix: {0}")]
    MalformedIncidence(String),

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index {index} out of range 1..={len}")]
    OutOfRange { index: usize, len: usize },

    #[error("sensing lost for robot {0}")]
    SensingLost(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
