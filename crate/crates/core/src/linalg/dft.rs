use std::f64::consts::PI;

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::{Error, Result};

/// Unitary n-point DFT matrix, `Φ[j][k] = exp(-2πi jk/n) / √n`.
pub fn dft_matrix(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::dim("DFT size must be at least 1"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(ComplexMatrix::from_fn(n, n, |j, k| {
        // reduce jk mod n first so the angle stays small and exact for large products
        let idx = (j * k) % n;
        Complex64::from_polar(scale, -2.0 * PI * idx as f64 / n as f64)
    }))
}

/// Angular-domain representation `Φ_{N_R} H Φ_{N_T}^T`.
pub fn dft2(h: &ComplexMatrix) -> ComplexMatrix {
    let (nr, nt) = h.shape();
    if h.is_empty() {
        return h.clone();
    }
    let fr = dft_matrix(nr).expect("nonzero rows");
    let ft = dft_matrix(nt).expect("nonzero cols");
    // Φ is symmetric, so Φ^T = Φ.
    fr.matmul(h)
        .and_then(|x| x.matmul(&ft))
        .expect("shapes agree by construction")
}

/// Inverse of [`dft2`]: `Φ_{N_R}^H H̃ Φ_{N_T}^*`.
pub fn idft2(ht: &ComplexMatrix) -> ComplexMatrix {
    let (nr, nt) = ht.shape();
    if ht.is_empty() {
        return ht.clone();
    }
    let fr_h = dft_matrix(nr).expect("nonzero rows").conj();
    let ft_c = dft_matrix(nt).expect("nonzero cols").conj();
    fr_h.matmul(ht)
        .and_then(|x| x.matmul(&ft_c))
        .expect("shapes agree by construction")
}
