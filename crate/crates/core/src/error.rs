use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for mode {mode} of size {size}")]
    IndexOutOfRange {
        mode: usize,
        index: usize,
        size: usize,
    },

    #[error("row {row}: {source}")]
    AtRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("size limit exceeded: {requested} entries requested, cap is {cap}")]
    SizeLimit { requested: u128, cap: usize },

    #[error("norm of the reference values is zero")]
    ZeroNorm,

    #[error("mode {mode} value {value} is never observed in the dataset")]
    Coverage { mode: usize, value: usize },

    #[error("mode {mode} value {value}: {rows} rows for {unknowns} unknowns")]
    InsufficientRows {
        mode: usize,
        value: usize,
        rows: usize,
        unknowns: usize,
    },

    #[error("non-finite value {value} at index {index:?}")]
    NonFinite { index: Vec<usize>, value: f64 },

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        Error::AtRow {
            row,
            source: Box::new(self),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.position() {
            Some(pos) => Error::Parse(format!("csv line {}: {}", pos.line(), e)),
            None => Error::Parse(format!("csv: {e}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
