use thiserror::Error;

/// Errors raised by the data model, loaders and distance computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("attribute column {column} is not binary (found value {value})")]
    UnsupportedAttributeArity { column: usize, value: u32 },

    #[error("group {0} is empty")]
    EmptyGroup(u8),

    #[error("dataset has no predictions")]
    MissingPredictions,

    #[error("conditional rate undefined: {0}")]
    UndefinedRate(String),

    #[error("correlation undefined: zero variance")]
    UndefinedCorrelation,

    #[error("NaN encountered in {0}")]
    NotANumber(&'static str),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing value at row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by malformed input files or schemas rather than by the
    /// computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::SchemaMismatch(_)
                | Error::Parse { .. }
                | Error::MissingValue { .. }
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
