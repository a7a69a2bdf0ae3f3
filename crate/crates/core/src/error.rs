use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: lo={lo} must be below hi={hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the domain of {function}: coordinate {index} = {value}")]
    DomainViolation {
        function: &'static str,
        index: usize,
        value: f64,
    },

    #[error("invalid landscape: {0}")]
    InvalidLandscape(String),

    #[error("invalid partitioning: {0} partitions per dimension")]
    InvalidPartitioning(usize),

    #[error("sequencing error: eval index {got} does not follow {last}")]
    Sequencing { last: u64, got: u64 },

    #[error("offline gap error requires a known optimum at every sample")]
    MissingOptimum,

    #[error("insufficient data: need at least 2 values, got {0}")]
    InsufficientData(usize),

    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(u64),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
