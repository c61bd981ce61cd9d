//! Complex linear algebra and qubit-register primitives.
//!
//! Everything here operates on small dense matrices (dimension at most 2^6)
//! stored row-major. Qubit 1 is the most significant bit of a basis index and
//! the outermost factor of every Kronecker product.

mod eigen;
mod matrix;
mod pauli;
mod state;

pub use eigen::{hermitian_eigen, hermitian_eigenvalues, symmetric_eigen, HermitianEigen};
pub use matrix::{tensor_product, ComplexMatrix};
pub use pauli::{pauli_matrix, Pauli, PauliMask, PauliString};
pub use state::{
    bipartitions, expectation, is_ppt, is_ppt_all, min_partial_transpose_eigenvalue,
    partial_transpose, partial_transpose_matrix, DensityMatrix, PureState,
};

pub use num_complex::Complex64;

/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Largest imaginary part tolerated in an expectation value.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;
/// Hermiticity tolerance for eigensolver inputs.
pub const EIGEN_HERMITIAN_TOL: f64 = 1e-10;
/// Unit-norm tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;

/// Register dimension 2^n.
pub fn dim(n_qubits: usize) -> usize {
    1usize << n_qubits
}

/// Number of Pauli strings 4^n.
pub fn n_paulis(n_qubits: usize) -> usize {
    1usize << (2 * n_qubits)
}
