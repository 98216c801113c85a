use thiserror::Error;

/// Errors raised by model construction, solving, log handling and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("instantiation error: {0}")]
    Instantiation(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("oracle refused: {0}")]
    OracleLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
