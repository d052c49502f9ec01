use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelModel;
use crate::linalg::hermitian_eig;
use crate::rng::stream;
use crate::{ComplexMatrix, Error, Result};

/// `‖H − Ĥ‖_F² / ‖H‖_F²` for one realization.
pub fn nmse_ch(h: &ComplexMatrix, h_hat: &ComplexMatrix) -> Result<f64> {
    if h.shape() != h_hat.shape() {
        return Err(Error::dim("channel and estimate differ in shape"));
    }
    let denom = h.fro_norm_sq();
    if !(denom > 0.0) {
        return Err(Error::DegenerateStatistics("zero-norm channel".into()));
    }
    Ok((h - h_hat).fro_norm_sq() / denom)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Mean and standard error (sample standard deviation over `√n`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Short content hash of a matrix, used to check trial pairing.
pub fn matrix_hash(m: &ComplexMatrix) -> String {
    let mut hasher = Sha256::new();
    for z in m.data() {
        hasher.update(z.re.to_le_bytes());
        hasher.update(z.im.to_le_bytes());
    }
    hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `−Σ p_i log p_i / log N` with `p_i = λ_i / Σλ`; eigenvalues below zero
/// (round-off) count as zero. A zero matrix has entropy 0.
pub fn spectral_entropy(gram: &ComplexMatrix) -> Result<f64> {
    let n = gram.rows();
    if n < 2 {
        return Ok(0.0);
    }
    let eig = hermitian_eig(gram)?;
    let lambdas: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = lambdas.iter().sum();
    if !(total > 0.0) {
        return Ok(0.0);
    }
    let h: f64 = lambdas
        .iter()
        .map(|l| l / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(h / (n as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub n_samples: usize,
    pub mean_entropy: f64,
    pub var_entropy: f64,
    /// Mean of the descending eigenvalues normalized to sum one.
    pub mean_spectrum: Vec<f64>,
}

/// Spectral statistics of `HH^H` over `n_samples` seeded draws.
pub fn gram_spectrum_stats(model: &ChannelModel, n_samples: usize, seed: u64) -> Result<SpectrumStats> {
    if n_samples == 0 {
        return Err(Error::InsufficientData("need at least one sample".into()));
    }
    let (n_r, _) = model.dims();
    let mut entropies = Vec::with_capacity(n_samples);
    let mut spectrum = vec![0.0; n_r];
    for i in 0..n_samples {
        let h = model.sample(&mut stream(seed, &[i as u64])).h;
        let g = h.gram();
        entropies.push(spectral_entropy(&g)?);
        let eig = hermitian_eig(&g)?;
        let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if total > 0.0 {
            for (s, l) in spectrum.iter_mut().zip(&eig.eigenvalues) {
                *s += l.max(0.0) / total;
            }
        }
    }
    let n = n_samples as f64;
    let mean = entropies.iter().sum::<f64>() / n;
    let var = entropies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    spectrum.iter_mut().for_each(|s| *s /= n);
    Ok(SpectrumStats {
        n_samples,
        mean_entropy: mean,
        var_entropy: var,
        mean_spectrum: spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::complex_normal_matrix;
    use crate::Complex64;

    #[test]
    fn nmse_examples() {
        let h = complex_normal_matrix(&mut stream(1, &[]), 4, 2, 1.0);
        assert_eq!(nmse_ch(&h, &h).unwrap(), 0.0);
        assert!((nmse_ch(&h, &ComplexMatrix::zeros(4, 2)).unwrap() - 1.0).abs() < 1e-15);
        assert!((nmse_ch(&h, &h.scale(2.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!(nmse_ch(&ComplexMatrix::zeros(4, 2), &h).is_err());
    }

    #[test]
    fn entropy_extremes() {
        let v = ComplexMatrix::from_fn(4, 1, |r, _| Complex64::new(r as f64 + 1.0, 0.5));
        assert!(spectral_entropy(&v.gram()).unwrap().abs() < 1e-9);
        assert!((spectral_entropy(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(spectral_entropy(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn stats_helpers() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[5.0]), (5.0, 0.0));
        assert!((to_db(0.1) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn hash_is_content_based() {
        let a = complex_normal_matrix(&mut stream(3, &[]), 2, 2, 1.0);
        assert_eq!(matrix_hash(&a), matrix_hash(&a.clone()));
        assert_ne!(matrix_hash(&a), matrix_hash(&a.scale(2.0)));
        assert_eq!(matrix_hash(&a).len(), 16);
    }
}
