use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use super::NoiseSchedule;
use crate::channel::GmChannelModel;
use crate::{ComplexMatrix, Error, Result};

/// Noise predictor `ε̂(H̃_t, t)`.
pub trait Denoiser: Send + Sync {
    fn predict_noise(
        &self,
        x: &ComplexMatrix,
        t: usize,
        schedule: &NoiseSchedule,
    ) -> Result<ComplexMatrix>;
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn predict_noise(&self, x: &ComplexMatrix, t: usize, s: &NoiseSchedule) -> Result<ComplexMatrix> {
        (**self).predict_noise(x, t, s)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for Box<D> {
    fn predict_noise(&self, x: &ComplexMatrix, t: usize, s: &NoiseSchedule) -> Result<ComplexMatrix> {
        (**self).predict_noise(x, t, s)
    }
}

/// Always predicts zero noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl Denoiser for ZeroNoise {
    fn predict_noise(&self, x: &ComplexMatrix, _t: usize, _s: &NoiseSchedule) -> Result<ComplexMatrix> {
        Ok(ComplexMatrix::zeros(x.rows(), x.cols()))
    }
}

/// Exact MMSE denoiser for a Gaussian-mixture prior with diagonal angular
/// covariances.
///
/// Given component k, each entry of `x = √ᾱ h + √(1−ᾱ) η` is
/// CN(0, ᾱ c_ki + 1 − ᾱ) and its posterior mean is
/// `√ᾱ c_ki / (ᾱ c_ki + 1 − ᾱ) · x_i`. Component responsibilities use the full
/// matrix likelihood, combined with log-sum-exp.
#[derive(Debug, Clone)]
pub struct AnalyticGmDenoiser {
    model: GmChannelModel,
    log_weights: Vec<f64>,
}

impl AnalyticGmDenoiser {
    pub fn new(model: GmChannelModel) -> Result<Self> {
        model.validate()?;
        let log_weights = model.components.iter().map(|c| c.weight.ln()).collect();
        Ok(Self { model, log_weights })
    }

    pub fn model(&self) -> &GmChannelModel {
        &self.model
    }

    /// Posterior mean `E[H̃_0 | H̃_t = x]`.
    pub fn posterior_mean(&self, x: &ComplexMatrix, alpha_bar: f64) -> Result<ComplexMatrix> {
        let n = self.model.n_r * self.model.n_t;
        if x.shape() != (self.model.n_r, self.model.n_t) {
            return Err(Error::dim(format!(
                "denoiser is {}x{}, input is {}x{}",
                self.model.n_r,
                self.model.n_t,
                x.rows(),
                x.cols()
            )));
        }
        let sa = alpha_bar.sqrt();
        let noise = 1.0 - alpha_bar;
        let k = self.model.components.len();

        let mut log_lik = Vec::with_capacity(k);
        for (comp, lw) in self.model.components.iter().zip(&self.log_weights) {
            let mut ll = *lw;
            for (z, &c) in x.data().iter().zip(&comp.variances) {
                let v = alpha_bar * c + noise;
                ll -= v.ln() + z.norm_sqr() / v;
            }
            log_lik.push(ll);
        }
        let max = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut resp: Vec<f64> = log_lik.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = resp.iter().sum();
        resp.iter_mut().for_each(|r| *r /= total);

        let mut gain = vec![0.0; n];
        for (comp, r) in self.model.components.iter().zip(&resp) {
            if *r == 0.0 {
                continue;
            }
            for (g, &c) in gain.iter_mut().zip(&comp.variances) {
                *g += r * sa * c / (alpha_bar * c + noise);
            }
        }
        let data: Vec<Complex64> = x.data().iter().zip(&gain).map(|(z, g)| z * g).collect();
        ComplexMatrix::new(x.rows(), x.cols(), data)
    }
}

impl Denoiser for AnalyticGmDenoiser {
    fn predict_noise(&self, x: &ComplexMatrix, t: usize, s: &NoiseSchedule) -> Result<ComplexMatrix> {
        let ab = s.alpha_bar(t);
        let mean = self.posterior_mean(x, ab)?;
        // ε̂ = (x − √ᾱ T) / √(1−ᾱ)
        let mut eps = x.clone();
        eps.axpy(-ab.sqrt(), &mean);
        eps.scale_mut(1.0 / (1.0 - ab).sqrt());
        Ok(eps)
    }
}

/// Wraps a backend and counts its evaluations.
#[derive(Debug, Default)]
pub struct CountingDenoiser<D> {
    inner: D,
    calls: AtomicUsize,
}

impl<D> CountingDenoiser<D> {
    pub fn new(inner: D) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl<D: Denoiser> Denoiser for CountingDenoiser<D> {
    fn predict_noise(&self, x: &ComplexMatrix, t: usize, s: &NoiseSchedule) -> Result<ComplexMatrix> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.predict_noise(x, t, s)
    }
}
