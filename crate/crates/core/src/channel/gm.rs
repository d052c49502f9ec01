use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::idft2;
use crate::rng::complex_normal;
use crate::{ComplexMatrix, Error, Result};

/// One mixture component: CN(0, diag(variances)) over row-major vec(H̃).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmComponent {
    pub weight: f64,
    pub variances: Vec<f64>,
}

/// Gaussian mixture prior with diagonal covariances in the angular domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmChannelModel {
    pub n_r: usize,
    pub n_t: usize,
    pub components: Vec<GmComponent>,
}

impl GmChannelModel {
    pub fn new(n_r: usize, n_t: usize, components: Vec<GmComponent>) -> Result<Self> {
        let model = Self {
            n_r,
            n_t,
            components,
        };
        model.validate()?;
        Ok(model)
    }

    /// Single unit-variance component: i.i.d. CN(0, 1) angular entries.
    pub fn single_gaussian(n_r: usize, n_t: usize) -> Self {
        Self {
            n_r,
            n_t,
            components: vec![GmComponent {
                weight: 1.0,
                variances: vec![1.0; n_r * n_t],
            }],
        }
    }

    /// The default stand-in mixture: `n_components` angularly clustered
    /// components whose variance profiles decay with a Cauchy tail around a
    /// random receive/transmit direction. Drawn once from `profile_seed` and
    /// normalized so every angular entry has unit variance under the mixture.
    pub fn clustered(n_r: usize, n_t: usize, n_components: usize, profile_seed: u64) -> Self {
        assert!(n_components >= 1 && n_r >= 1 && n_t >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(profile_seed);
        let rx_scale = n_r as f64 / 16.0;
        let tx_scale = n_t as f64 / 4.0;
        let mut raw_weights: Vec<f64> = (0..n_components).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = raw_weights.iter().sum();
        raw_weights.iter_mut().for_each(|w| *w /= total);

        let components = raw_weights
            .into_iter()
            .map(|weight| {
                let n_clusters = rng.gen_range(1..=2);
                let mut variances = vec![1e-3; n_r * n_t];
                for _ in 0..n_clusters {
                    let mu_r = rng.gen_range(0.0..n_r as f64);
                    let mu_t = rng.gen_range(0.0..n_t as f64);
                    let s_r = rng.gen_range(0.4..2.0) * rx_scale;
                    let s_t = rng.gen_range(0.3..1.2) * tx_scale;
                    let power = rng.gen_range(0.3..1.0);
                    for i in 0..n_r {
                        let pr = cauchy(circular_distance(i as f64, mu_r, n_r as f64), s_r);
                        for j in 0..n_t {
                            let pt = cauchy(circular_distance(j as f64, mu_t, n_t as f64), s_t);
                            variances[i * n_t + j] += power * pr * pt;
                        }
                    }
                }
                GmComponent { weight, variances }
            })
            .collect();
        let mut model = Self {
            n_r,
            n_t,
            components,
        };
        model.normalize_entries();
        model
    }

    /// Rescales every entry so its mixture-averaged variance is exactly one.
    pub fn normalize_entries(&mut self) {
        for i in 0..self.n_r * self.n_t {
            let avg: f64 = self
                .components
                .iter()
                .map(|c| c.weight * c.variances[i])
                .sum();
            for c in &mut self.components {
                c.variances[i] /= avg;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_r * self.n_t;
        if n == 0 {
            return Err(Error::Config("channel dimensions must be nonzero".into()));
        }
        if self.components.is_empty() {
            return Err(Error::Config("mixture needs at least one component".into()));
        }
        let mut total = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::Config(format!("component {k}: weight must be positive")));
            }
            if c.variances.len() != n {
                return Err(Error::Config(format!(
                    "component {k}: {} variances for {n} entries",
                    c.variances.len()
                )));
            }
            if c.variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("component {k}: variances must be positive")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("mixture weights sum to {total}")));
        }
        Ok(())
    }

    /// Mixture-averaged variance of each angular entry.
    pub fn mean_variances(&self) -> Vec<f64> {
        (0..self.n_r * self.n_t)
            .map(|i| self.components.iter().map(|c| c.weight * c.variances[i]).sum())
            .collect()
    }

    pub fn pick_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                return k;
            }
        }
        self.components.len() - 1
    }

    /// Angular-domain draw from a given component.
    pub fn sample_angular_from<R: Rng + ?Sized>(&self, component: usize, rng: &mut R) -> ComplexMatrix {
        let vars = &self.components[component].variances;
        ComplexMatrix::from_fn(self.n_r, self.n_t, |i, j| {
            complex_normal(rng, vars[i * self.n_t + j])
        })
    }

    /// Spatial-domain draw; returns the channel and its generating component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (ComplexMatrix, usize) {
        let k = self.pick_component(rng);
        (idft2(&self.sample_angular_from(k, rng)), k)
    }
}

fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

fn cauchy(d: f64, s: f64) -> f64 {
    1.0 / (1.0 + (d / s).powi(2))
}
