use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error for utterance {id:?}: {message}")]
    Validation { id: String, message: String },

    #[error("pairing error: ids missing from {side}: {ids:?}")]
    Pairing { side: String, ids: Vec<String> },

    #[error("sequence too short: N = {n} frames, order d = {d} needs N >= d + 1")]
    TooShort { n: usize, d: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the CLI: 3 for data problems, 4 for numeric failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Shape(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Pairing { .. }
            | Error::TooShort { .. }
            | Error::Config(_) => 3,
            Error::Numeric(_) | Error::Training(_) | Error::Metric(_) => 4,
            Error::Io { .. } => 1,
        }
    }
}
