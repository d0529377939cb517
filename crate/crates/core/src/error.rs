use thiserror::Error;

/// Errors produced by the simulator and decoders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("standard deviation must be nonnegative and finite, got {0}")]
    NegativeSigma(f64),
    #[error("standard deviation must be strictly positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("quadrature value must be finite, got {0}")]
    NonFinite(f64),
    #[error("deviation {0} lies outside the bin range (-sqrt(pi)/2, sqrt(pi)/2]")]
    DeviationOutOfRange(f64),
    #[error("expected {expected} leaves, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("concatenation level must be at least 1")]
    ZeroLevel,
    #[error("brute-force oracle supports levels 1 and 2 only, got level {0}")]
    OracleLevelTooLarge(u32),
    #[error("empty record list")]
    EmptyRecords,
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
    #[error("no crossing in grid: {0}")]
    NoCrossing(String),
    #[error("malformed results at line {line}: {msg}")]
    MalformedRow { line: u64, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
