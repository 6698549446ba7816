use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate entry for user `{user}` and item `{item}`")]
    DuplicateEntry { line: u64, user: String, item: String },

    #[error("line {line}: rating {rating} outside [{min}, {max}]")]
    OutOfRange { line: u64, rating: f64, min: f64, max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("no useful weak learner after {rounds} rounds (every alpha was 0; last |I|={last_mispredicted}, |J|={last_within})")]
    NoUsefulLearner { rounds: usize, last_mispredicted: usize, last_within: usize },

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
