use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("not a density matrix: {0}")]
    InvalidDensity(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field mismatch: GF({0}) vs GF({1})")]
    FieldMismatch(usize, usize),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("malformed structure: {0}")]
    Malformed(String),

    #[error("rate has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("transport failure in round {round}: {message}")]
    Transport { round: u64, message: String },

    #[error("transport closed")]
    Closed,

    #[error("cannot decode field `{field}`: {message}")]
    Decode { field: &'static str, message: String },

    #[error("input is not informationally complete: {0}")]
    NotInformationallyComplete(String),

    #[error("optimizer did not converge after {restarts} restarts (best objective {best:e})")]
    NonConvergence { restarts: usize, best: f64 },

    #[error("missing inputs: {0}")]
    MissingInputs(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
