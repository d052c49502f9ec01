use serde::{Deserialize, Serialize};

use crate::{ComplexMatrix, Error, Result};

/// Per-entry angular scaling to unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub n_r: usize,
    pub n_t: usize,
    /// `1 / std` of each row-major angular entry.
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn identity(n_r: usize, n_t: usize) -> Self {
        Self {
            n_r,
            n_t,
            scale: vec![1.0; n_r * n_t],
        }
    }

    /// Fits the scales on a set of angular-domain matrices.
    pub fn fit(dataset: &[ComplexMatrix]) -> Result<Self> {
        let first = dataset
            .first()
            .ok_or_else(|| Error::DegenerateStatistics("empty dataset".into()))?;
        let (n_r, n_t) = first.shape();
        let n = n_r * n_t;
        let count = dataset.len() as f64;
        let mut mean = vec![num_complex::Complex64::new(0.0, 0.0); n];
        for h in dataset {
            if h.shape() != (n_r, n_t) {
                return Err(Error::dim("dataset matrices differ in shape"));
            }
            for (m, z) in mean.iter_mut().zip(h.data()) {
                *m += z;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; n];
        for h in dataset {
            for ((v, z), m) in var.iter_mut().zip(h.data()).zip(&mean) {
                *v += (z - m).norm_sqr();
            }
        }
        let scale = var
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let v = v / count;
                if v > 0.0 && v.is_finite() {
                    Ok(1.0 / v.sqrt())
                } else {
                    Err(Error::DegenerateStatistics(format!(
                        "angular entry {i} has zero variance"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_r, n_t, scale })
    }

    fn check(&self, h: &ComplexMatrix) -> Result<()> {
        if h.shape() != (self.n_r, self.n_t) {
            return Err(Error::dim(format!(
                "normalizer is {}x{}, matrix is {}x{}",
                self.n_r,
                self.n_t,
                h.rows(),
                h.cols()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, h: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(h)?;
        let mut out = h.clone();
        for (z, s) in out.data_mut().iter_mut().zip(&self.scale) {
            *z *= *s;
        }
        Ok(out)
    }

    pub fn unapply(&self, h: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(h)?;
        let mut out = h.clone();
        for (z, s) in out.data_mut().iter_mut().zip(&self.scale) {
            *z /= *s;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal_matrix, stream};

    #[test]
    fn identical_matrices_are_degenerate() {
        let h = ComplexMatrix::identity(2);
        let err = Normalizer::fit(&[h.clone(), h.clone(), h]).unwrap_err();
        assert!(matches!(err, Error::DegenerateStatistics(_)));
    }

    #[test]
    fn empty_dataset_is_degenerate() {
        assert!(matches!(Normalizer::fit(&[]), Err(Error::DegenerateStatistics(_))));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = stream(3, &[]);
        let data: Vec<_> = (0..50).map(|_| complex_normal_matrix(&mut rng, 3, 2, 2.5)).collect();
        let norm = Normalizer::fit(&data).unwrap();
        let x = &data[7];
        let back = norm.unapply(&norm.apply(x).unwrap()).unwrap();
        assert!(back.max_abs_diff(x) < 1e-12);
    }

    #[test]
    fn variance_four_gives_half_scale() {
        let mut rng = stream(4, &[]);
        let data: Vec<_> = (0..10_000).map(|_| complex_normal_matrix(&mut rng, 2, 2, 4.0)).collect();
        let norm = Normalizer::fit(&data).unwrap();
        for s in &norm.scale {
            assert!((s - 0.5).abs() < 0.5 * 0.02, "{s}");
        }
    }
}
