use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),

    #[error("row {row}: cannot parse column `{column}`")]
    ParseError { row: usize, column: String },

    #[error("file contains a header but no data rows")]
    EmptyFile,

    #[error("split fractions must be positive and sum to 1")]
    InvalidFractions,

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("too few samples: need at least {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("objective evaluated to a non-finite value")]
    NonFinite,

    #[error("matrix contains non-finite values")]
    NonFiniteInput,

    #[error("score configuration is missing its attachment: {0}")]
    MissingAttachment(&'static str),

    #[error("district {0} was not seen during training")]
    UnknownDistrict(u32),

    #[error("no calibration scores supplied")]
    EmptyScores,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("response values must be positive")]
    NonPositiveResponse,

    #[error("level must lie strictly between 0 and 1")]
    InvalidLevel,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no results found in {0}")]
    MissingResults(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
