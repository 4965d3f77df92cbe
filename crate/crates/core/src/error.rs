use thiserror::Error;

/// Errors produced by the simulator and the bound evaluators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid bit string: {0}")]
    InvalidBitString(String),

    #[error("matrix parse error on line {line}: {message}")]
    MatrixParse { line: usize, message: String },

    #[error("rows are not linearly independent (rank {rank}, expected {expected})")]
    NotFullRank { rank: usize, expected: usize },

    #[error("instance too large for exhaustive mode: {0}")]
    TooLarge(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("value out of domain: {0}")]
    OutOfDomain(String),

    #[error("unknown attack `{0}`")]
    UnknownAttack(String),

    #[error("unrealizable channel noise (q_z = {q_z}, q_x = {q_x}): realizable rates satisfy 0 <= q_z <= 0.5 and 0 <= q_x <= 0.5")]
    Unrealizable { q_z: f64, q_x: f64 },

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("protocol phase violation: {0}")]
    Phase(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
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
