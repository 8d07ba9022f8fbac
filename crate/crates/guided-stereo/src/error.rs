use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("hint out of disparity range at pixel ({row}, {col}): g = {hint}, max disparity = {max_disparity}")]
    HintOutOfRange {
        row: usize,
        col: usize,
        hint: f32,
        max_disparity: usize,
    },

    #[error("no valid hint candidates in ground truth")]
    NoValidCandidates,

    #[error("empty evaluation set")]
    EmptyEvaluationSet,

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: line {line}: {message}")]
    FormatAt {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn format_at(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::FormatAt {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code class: 2 for I/O and file-format failures, 3 for
    /// computation-domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Format { .. } | Error::FormatAt { .. } => 2,
            _ => 3,
        }
    }
}
