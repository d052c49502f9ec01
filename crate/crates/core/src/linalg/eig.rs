use std::cmp::Ordering;

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = V diag(λ) V^H` of a Hermitian matrix.
///
/// Eigenvalues are sorted descending (up to `1e-10·‖A‖_F` inside a cluster
/// of near-equal values). Each eigenvector is phase-normalized so
/// its first nonzero entry is real and positive; inside a cluster of equal
/// eigenvalues the vectors are ordered lexicographically (descending) by their
/// entries, which makes the output deterministic for degenerate spectra.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Columns are unit-norm eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// `V diag(f(λ)) V^H`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix. The input is
/// symmetrized as `(A + A^H)/2` before iterating.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);

    let scale = m.fro_norm();
    if n > 1 && scale > 0.0 {
        let tol = 1e-15 * scale;
        let mut converged = false;
        let mut residual = off_diagonal_norm(&m);
        for _ in 0..MAX_SWEEPS {
            if residual <= tol {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q, tol / n as f64);
                }
            }
            residual = off_diagonal_norm(&m);
        }
        if !converged && residual > tol {
            return Err(Error::Convergence {
                sweeps: MAX_SWEEPS,
                residual,
            });
        }
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let mut col: Vec<Complex64> = (0..n).map(|i| v[(i, k)]).collect();
            normalize_phase(&mut col);
            (m[(k, k)].re, col)
        })
        .collect();

    // Strict descending sort, then vectors inside each run of near-equal
    // eigenvalues are reordered; runs chain from their first element so the
    // grouping is well defined.
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let cluster_tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[start].0 - pairs[end].0 <= cluster_tol {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lexicographic_desc(&a.1, &b.1));
        start = end;
    }

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation zeroing `m[p][q]`. The 2x2 block is first made
/// real by a diagonal phase on column q, then a real Givens rotation
/// diagonalizes it.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, skip_below: f64) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag <= skip_below {
        return;
    }
    let phase = apq / mag;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;

    let n = m.rows();
    // M <- M G
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * g_pp + mkq * g_qp;
        m[(k, q)] = mkp * g_pq + mkq * g_qq;
    }
    // M <- G^H M
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = g_pp.conj() * mpk + g_qp.conj() * mqk;
        m[(q, k)] = g_pq.conj() * mpk + g_qq.conj() * mqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

fn normalize_phase(col: &mut [Complex64]) {
    let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let thresh = 1e-12 * norm;
    if let Some(first) = col.iter().find(|z| z.norm() > thresh).copied() {
        let rot = first.conj() / first.norm() / norm;
        for z in col.iter_mut() {
            *z *= rot;
        }
    }
}

fn lexicographic_desc(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.re.partial_cmp(&x.re) {
            Some(Ordering::Equal) | None => {}
            Some(o) => return o,
        }
        match y.im.partial_cmp(&x.im) {
            Some(Ordering::Equal) | None => {}
            Some(o) => return o,
        }
    }
    Ordering::Equal
}
