use thiserror::Error;

/// Errors raised across the witness toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no factors")]
    NoFactors,
    #[error("non-square matrix ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-Hermitian expectation (imaginary part {0:e})")]
    NonHermitianExpectation(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("qubit index {index} out of range 1..={n_qubits}")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("not a state: {0}")]
    NotAState(String),
    #[error("outside tetrahedron: eigenvalue {0:e}")]
    OutsideTetrahedron(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot realize entangled sample in configured range")]
    CannotRealizeEntangled,
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("training diverged at epoch {epoch}: objective {previous:e} -> {current:e}")]
    Diverged {
        epoch: usize,
        previous: f64,
        current: f64,
    },
    #[error("no witness separates this data (minimum eigenvalue {0:e} after calibration)")]
    NoWitness(f64),
    #[error("trace not rational-affine (residual {0:e})")]
    NotRationalAffine(f64),
    #[error("trace not affine in p (residual {0:e})")]
    NotAffine(f64),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
