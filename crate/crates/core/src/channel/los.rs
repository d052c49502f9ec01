use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::idft2;
use crate::{ComplexMatrix, Error, Result};

/// Clustered line-of-sight style channel with a concentrated eigen-spectrum.
///
/// `H̃ = Σ_l g_l u_l v_lᵀ`, where `u_l`, `v_l` are unit-norm angular
/// signatures (a Gaussian bump around a random direction, width set by the
/// spread), cluster powers decay geometrically and each gain carries a
/// uniform random phase. Total power is `n_r · n_t` so the average entry
/// variance is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosChannelModel {
    pub n_r: usize,
    pub n_t: usize,
    /// Number of dominant angular clusters.
    pub clusters: usize,
    /// Power ratio between consecutive clusters, in (0, 1].
    pub decay: f64,
    /// Angular spread in bins; near zero gives Kronecker-delta signatures.
    pub spread: f64,
}

impl LosChannelModel {
    pub fn new(n_r: usize, n_t: usize, clusters: usize, decay: f64, spread: f64) -> Result<Self> {
        let m = Self {
            n_r,
            n_t,
            clusters,
            decay,
            spread,
        };
        m.validate()?;
        Ok(m)
    }

    /// Default family parameters: three clusters, power ratio 0.3, spread
    /// half a bin.
    pub fn default_for(n_r: usize, n_t: usize) -> Self {
        Self {
            n_r,
            n_t,
            clusters: 3,
            decay: 0.3,
            spread: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 || self.n_t == 0 {
            return Err(Error::Config("channel dimensions must be nonzero".into()));
        }
        if self.clusters == 0 {
            return Err(Error::Config("LOS model needs at least one cluster".into()));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(format!("decay {} outside (0, 1]", self.decay)));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::Config(format!("invalid spread {}", self.spread)));
        }
        Ok(())
    }

    pub fn sample_angular<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        let total = (self.n_r * self.n_t) as f64;
        let raw: Vec<f64> = (0..self.clusters).map(|l| self.decay.powi(l as i32)).collect();
        let norm: f64 = raw.iter().sum();
        let mut h = ComplexMatrix::zeros(self.n_r, self.n_t);
        for p in raw {
            let power = p / norm * total;
            let u = signature(self.n_r, rng.gen_range(0.0..self.n_r as f64), self.spread);
            let v = signature(self.n_t, rng.gen_range(0.0..self.n_t as f64), self.spread);
            let gain = Complex64::from_polar(power.sqrt(), rng.gen_range(0.0..2.0 * PI));
            for i in 0..self.n_r {
                for j in 0..self.n_t {
                    h[(i, j)] += gain * u[i] * v[j];
                }
            }
        }
        h
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        idft2(&self.sample_angular(rng))
    }
}

/// Unit-norm real bump centered at `center` on a circular grid of `n` bins.
fn signature(n: usize, center: f64, spread: f64) -> Vec<f64> {
    let width = spread.max(1e-3);
    let mut s: Vec<f64> = (0..n)
        .map(|i| {
            let d = (i as f64 - center).rem_euclid(n as f64);
            let d = d.min(n as f64 - d);
            (-0.5 * (d / width).powi(2)).exp()
        })
        .collect();
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    s.iter_mut().for_each(|x| *x /= norm);
    s
}
