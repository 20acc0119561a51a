use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid menu entry: {0}")]
    InvalidEntry(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("audit failed: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
