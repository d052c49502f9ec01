//! Blind estimation of the channel Gram matrix `HH^H` from data observations.
//!
//! `(1/N_d) Y_d Y_d^H → HH^H + σ_d² I` as the data block grows, so the
//! estimate is the bias-corrected sample Gram projected back onto the PSD
//! cone, then optionally shrunk toward a scaled identity.

use serde::{Deserialize, Serialize};

use crate::linalg::{dft_matrix, hermitian_eig};
use crate::{ComplexMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramProvenance {
    Oracle,
    Estimated,
}

#[derive(Debug, Clone)]
pub struct GramEstimate {
    /// `R̂` in the spatial domain, `N_R × N_R` Hermitian PSD.
    pub r_spatial: ComplexMatrix,
    /// `Φ R̂ Φ^H`.
    pub r_angular: ComplexMatrix,
    pub source: GramProvenance,
    pub n_d_used: usize,
    pub shrinkage: f64,
    /// Set when projection left nothing (zero trace); guidance should be
    /// switched off for this frame.
    pub low_confidence: bool,
}

/// `Φ_{N_R} R Φ_{N_R}^H`
pub fn to_angular(r_spatial: &ComplexMatrix) -> ComplexMatrix {
    let phi = dft_matrix(r_spatial.rows()).expect("non-empty Gram");
    let out = phi
        .matmul(r_spatial)
        .and_then(|x| x.matmul(&phi.adjoint()))
        .expect("square");
    out.hermitian_part()
}

/// Exact Gram `HH^H`.
pub fn oracle_gram(h: &ComplexMatrix) -> GramEstimate {
    let r = h.gram();
    GramEstimate {
        r_angular: to_angular(&r),
        r_spatial: r,
        source: GramProvenance::Oracle,
        n_d_used: 0,
        shrinkage: 0.0,
        low_confidence: false,
    }
}

/// Robustifying projection: Hermitian symmetrization, eigenvalue clipping at
/// zero, then `ρ (tr/N) I + (1−ρ) clipped`. Returns the projected matrix and
/// whether its trace vanished.
pub fn project_psd(raw: &ComplexMatrix, shrinkage: f64) -> Result<(ComplexMatrix, bool)> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::Config(format!("shrinkage {shrinkage} outside [0, 1]")));
    }
    let eig = hermitian_eig(raw)?;
    let clipped = eig.reconstruct_with(|l| l.max(0.0)).hermitian_part();
    let n = raw.rows();
    let trace = clipped.trace().re;
    if !(trace > 0.0) {
        return Ok((ComplexMatrix::zeros(n, n), true));
    }
    if shrinkage == 0.0 {
        return Ok((clipped, false));
    }
    let mut out = clipped.scale(1.0 - shrinkage);
    let target = shrinkage * trace / n as f64;
    for i in 0..n {
        out[(i, i)] += target;
    }
    Ok((out, false))
}

/// `P((1/N_d) Y_d Y_d^H − σ_d² I)` and its angular counterpart.
pub fn sample_gram(y_d: &ComplexMatrix, sigma2_d: f64, shrinkage: f64) -> Result<GramEstimate> {
    let n_d = y_d.cols();
    if n_d == 0 {
        return Err(Error::InsufficientData(
            "sample Gram needs at least one data symbol".into(),
        ));
    }
    let mut raw = y_d.gram().scale(1.0 / n_d as f64);
    for i in 0..raw.rows() {
        raw[(i, i)].re -= sigma2_d;
    }
    let (r, degenerate) = project_psd(&raw, shrinkage)?;
    Ok(GramEstimate {
        r_angular: to_angular(&r),
        r_spatial: r,
        source: GramProvenance::Estimated,
        n_d_used: n_d,
        shrinkage,
        low_confidence: degenerate,
    })
}

/// `‖R̂ − R‖_F² / ‖R‖_F²` for one realization.
pub fn gram_nmse(est: &ComplexMatrix, truth: &ComplexMatrix) -> Result<f64> {
    if est.shape() != truth.shape() {
        return Err(Error::dim("Gram shapes differ"));
    }
    let denom = truth.fro_norm_sq();
    if !(denom > 0.0) {
        return Err(Error::DegenerateStatistics("true Gram matrix is zero".into()));
    }
    Ok((est - truth).fro_norm_sq() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dft2;
    use crate::rng::{complex_normal_matrix, stream};

    #[test]
    fn oracle_of_identity() {
        let g = oracle_gram(&ComplexMatrix::identity(2));
        assert_eq!(g.r_spatial, ComplexMatrix::identity(2));
        assert_eq!(g.source, GramProvenance::Oracle);
    }

    #[test]
    fn oracle_of_column_vector() {
        let h = ComplexMatrix::from_real_rows(&[&[1.0], &[0.0]]).unwrap();
        let g = oracle_gram(&h);
        let expected = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(g.r_spatial, expected);
    }

    #[test]
    fn angular_gram_matches_angular_channel() {
        let h = complex_normal_matrix(&mut stream(8, &[]), 6, 3, 1.0);
        let ht = dft2(&h);
        let g = oracle_gram(&h);
        assert!(g.r_angular.max_abs_diff(&ht.gram()) < 1e-12);
    }

    #[test]
    fn clipping_negative_eigenvalue() {
        let raw = ComplexMatrix::diag_real(&[1.0, -0.5]);
        let (p, degenerate) = project_psd(&raw, 0.0).unwrap();
        assert!(!degenerate);
        let e = hermitian_eig(&p).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
    }

    #[test]
    fn shrinkage_moves_toward_scaled_identity() {
        let raw = ComplexMatrix::diag_real(&[3.0, 1.0]);
        let (p, _) = project_psd(&raw, 1.0).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::diag_real(&[2.0, 2.0])) < 1e-14);
        let (p, _) = project_psd(&raw, 0.5).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::diag_real(&[2.5, 1.5])) < 1e-14);
        assert!(project_psd(&raw, 1.5).is_err());
    }

    #[test]
    fn all_negative_is_degenerate_zero() {
        let raw = ComplexMatrix::diag_real(&[-1.0, -0.5]);
        let (p, degenerate) = project_psd(&raw, 0.3).unwrap();
        assert!(degenerate);
        assert_eq!(p, ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn noiseless_orthogonal_data_is_exact() {
        // rows of a scaled 4-point DFT: X X^H = N_d I exactly
        let n_d = 4;
        let x = dft_matrix(n_d).unwrap().scale((n_d as f64).sqrt());
        let x = ComplexMatrix::from_fn(2, n_d, |r, c| x[(r, c)]);
        let h = complex_normal_matrix(&mut stream(5, &[]), 3, 2, 1.0);
        let y = h.matmul(&x).unwrap();
        let g = sample_gram(&y, 0.0, 0.0).unwrap();
        assert!(g.r_spatial.max_abs_diff(&h.gram()) < 1e-12);
        assert_eq!(g.n_d_used, 4);
    }

    #[test]
    fn no_data_is_insufficient() {
        assert!(matches!(
            sample_gram(&ComplexMatrix::zeros(3, 0), 0.1, 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn nmse_edge_values() {
        let r = ComplexMatrix::diag_real(&[2.0, 1.0]);
        assert_eq!(gram_nmse(&r, &r).unwrap(), 0.0);
        assert!((gram_nmse(&ComplexMatrix::zeros(2, 2), &r).unwrap() - 1.0).abs() < 1e-15);
        assert!(gram_nmse(&r, &ComplexMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn estimate_is_hermitian_psd() {
        let mut rng = stream(6, &[]);
        let y = complex_normal_matrix(&mut rng, 5, 7, 1.0);
        let g = sample_gram(&y, 1.0, 0.0).unwrap();
        assert!(g.r_spatial.hermitian_defect() < 1e-12);
        assert!(hermitian_eig(&g.r_spatial).unwrap().min_eigenvalue() >= -1e-9);
        assert!(g.r_angular.hermitian_defect() < 1e-12);
    }
}
