use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller supplied something that does not fit the graph or the contract
    /// of the operation (unknown vertex, overlapping sets, ...).
    #[error("input error: {0}")]
    Input(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    /// Nonzero numerator over a zero denominator.
    #[error("evaluation error: division by zero in {expr} at {assignment}")]
    ZeroDenominator { expr: String, assignment: String },

    #[error("missing input: {0}")]
    MissingInput(String),

    /// A conditional probability was requested on a stratum with no rows.
    #[error("empty stratum {stratum} in table {table}")]
    EmptyStratum { table: String, stratum: String },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
