//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state vector of length {0} is not normalized (norm {1})")]
    NotNormalized(usize, f64),
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not Hermitian (max deviation {0})")]
    NotHermitian(f64),
    #[error("matrix trace {0} differs from one")]
    NotUnitTrace(f64),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("empty keep set in partial trace")]
    EmptyKeepSet,
    #[error("duplicate target qubit {0}")]
    DuplicateTarget(usize),
    #[error("Pauli index {index} out of range for {num_qubits} qubits")]
    PauliIndexOutOfRange { index: usize, num_qubits: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("layer width mismatch: expected {expected} qubits, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("empty dataset")]
    EmptyData,
    #[error("noise stage {0} has no pure-state shot model")]
    NoShotModel(String),
    #[error("test states carry no flip-count labels")]
    MissingFlipLabels,
    #[error("analytic baseline requires phases that are multiples of pi, got {0}")]
    BaselineUndefined(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
