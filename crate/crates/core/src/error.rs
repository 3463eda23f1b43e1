use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("geometry mismatch: expected {expected}, got {actual}")]
    GeometryMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("channel generation failed: {0}")]
    Generation(String),

    #[error("rank is undefined for a zero matrix")]
    UndefinedRank,

    #[error("infeasible hybrid design: {0}")]
    Infeasible(String),

    #[error("analog block is rank deficient: {0}")]
    RankDeficient(String),

    #[error("training plan error: {0}")]
    Plan(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("OMP breakdown: {0}")]
    OmpBreakdown(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
