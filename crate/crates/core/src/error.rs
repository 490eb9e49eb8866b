use thiserror::Error;

/// Errors raised by the distribution algebra, the domain model and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible distributions: bin widths {0} and {1} differ")]
    IncompatibleDistributions(f64, f64),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("incomplete profile: {0}")]
    IncompleteProfile(String),

    #[error("missing profile: {0}")]
    MissingProfile(String),

    #[error("workflow is not a DAG: {0}")]
    NotADag(String),

    #[error("workflow cannot be partitioned: {0}")]
    NotPartitionable(String),

    #[error("unknown fog id {0}")]
    InvalidId(u32),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
