use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training failed at step {step}: {reason} (last finite loss {last_loss})")]
    TrainingFailure {
        step: usize,
        reason: String,
        last_loss: f64,
    },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("promise violation: {0}")]
    PromiseViolation(String),

    #[error("parse error in {source_name} at byte {offset}: {message}")]
    Parse {
        source_name: String,
        offset: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Converts a serde_json error on `text` into a [`Error::Parse`] carrying
    /// the byte offset of the failure.
    pub fn from_json(source_name: &str, text: &str, err: serde_json::Error) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            offset: byte_offset(text, err.line(), err.column()),
            message: err.to_string(),
        }
    }
}

/// serde_json reports 1-based line and column (column in bytes); turn that
/// into an absolute byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Parses a JSON document, mapping failures to [`Error::Parse`].
pub fn parse_json<T: serde::de::DeserializeOwned>(source_name: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::from_json(source_name, text, e))
}
