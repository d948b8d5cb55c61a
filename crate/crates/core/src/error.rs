//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("requested {requested} qubits exceeds cap {cap}")]
    TooManyQubits { requested: usize, cap: usize },
    #[error("state norm is {0}, expected 1 within 1e-8 (renormalize explicitly)")]
    NotNormalized(f64),
    #[error("qubit index {q} out of range for {n} qubits")]
    QubitOutOfRange { q: usize, n: usize },
    #[error("basis index {idx} out of range for dimension {dim}")]
    IndexOutOfRange { idx: usize, dim: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("postselection outcome has probability {0:.3e}, below the 1e-14 cutoff")]
    ImpossiblePostselection(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad statevector dump: {0}")]
    BadDump(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
