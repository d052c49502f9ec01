//! Dense complex linear algebra: matrices, unitary DFTs and Hermitian
//! eigendecomposition. Sizes here are small (at most 64 per side), so
//! everything is plain row-major loops.

mod dft;
mod eig;
mod matrix;

pub use dft::{dft2, dft_matrix, idft2};
pub use eig::{hermitian_eig, HermitianEig};
pub use matrix::ComplexMatrix;

pub use num_complex::Complex64;

/// Frobenius norm.
pub fn fro_norm(a: &ComplexMatrix) -> f64 {
    a.fro_norm()
}

/// Checked matrix product `a * b`.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> crate::Result<ComplexMatrix> {
    a.matmul(b)
}

/// Conjugate transpose.
pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}
