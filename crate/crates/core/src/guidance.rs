//! Guidance directions and their step-size schedules.
//!
//! Gradients of real functions of a complex matrix are taken over the
//! `2·N_R·N_T` real coordinates and packed back as `∂/∂Re + i ∂/∂Im`.

use serde::{Deserialize, Serialize};

use crate::diffusion::NoiseSchedule;
use crate::{ComplexMatrix, Error, Result};

/// Multiplier on `λ_Gram` applied when the data block has at least `min_n_d`
/// symbols (the largest matching threshold wins).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramAdaptation {
    pub min_n_d: usize,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceConfig {
    /// Global scale of the likelihood step, `λ_like,t = λ_like β_t w(SNR)`.
    pub lambda_like: f64,
    /// Global scale of the Gram step, `λ_Gram,t = λ_gram √β_t`.
    pub lambda_gram: f64,
    /// Gate midpoint in dB.
    pub snr0_db: f64,
    /// Gate width in dB: the gate reaches `sigmoid(1)` at `snr0_db + delta_db`.
    pub delta_db: f64,
    pub gating_enabled: bool,
    pub clip_enabled: bool,
    /// Frobenius-norm cap on the Gram update.
    pub clip_threshold: f64,
    pub clip_epsilon: f64,
    /// `λ_Gram` multipliers keyed by data block length.
    pub n_d_adaptation: Vec<GramAdaptation>,
    /// Reliability knee `κ₀` of the estimated Gram matrix; see
    /// [`reliability_multiplier`]. `None` disables the reliability factor.
    pub reliability_kappa0: Option<f64>,
    /// Fall-off exponent `p` below the knee.
    pub reliability_exponent: f64,
}

/// Values chosen by the calibration search committed in
/// `calibration/calibration.json`.
impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            lambda_like: 0.01,
            lambda_gram: 0.05,
            snr0_db: -10.0,
            delta_db: 2.0,
            gating_enabled: false,
            clip_enabled: true,
            clip_threshold: 1.0,
            clip_epsilon: 1e-8,
            n_d_adaptation: vec![
                GramAdaptation {
                    min_n_d: 0,
                    multiplier: 0.1,
                },
                GramAdaptation {
                    min_n_d: 20,
                    multiplier: 0.3,
                },
                GramAdaptation {
                    min_n_d: 200,
                    multiplier: 1.0,
                },
            ],
            reliability_kappa0: Some(10.0),
            reliability_exponent: 4.0,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.lambda_like,
            self.lambda_gram,
            self.snr0_db,
            self.delta_db,
            self.clip_threshold,
            self.clip_epsilon,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("guidance parameters must be finite".into()));
        }
        if self.lambda_like < 0.0 || self.lambda_gram < 0.0 {
            return Err(Error::Config("guidance scales must be non-negative".into()));
        }
        if self.delta_db <= 0.0 {
            return Err(Error::Config("gate width must be positive".into()));
        }
        if self.clip_threshold <= 0.0 || self.clip_epsilon <= 0.0 {
            return Err(Error::Config("clip threshold and epsilon must be positive".into()));
        }
        if let Some(k) = self.reliability_kappa0 {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config("reliability knee must be positive".into()));
            }
        }
        if !(self.reliability_exponent > 0.0 && self.reliability_exponent.is_finite()) {
            return Err(Error::Config("reliability exponent must be positive".into()));
        }
        if self.n_d_adaptation.iter().any(|a| !(a.multiplier >= 0.0)) {
            return Err(Error::Config("adaptation multipliers must be non-negative".into()));
        }
        Ok(())
    }

    /// Gate midpoint as a raw SNR ratio.
    pub fn snr0(&self) -> f64 {
        10f64.powf(self.snr0_db / 10.0)
    }

    /// Gate width as a raw SNR difference: the distance from `snr0` to the
    /// ratio `delta_db` above it.
    pub fn delta(&self) -> f64 {
        self.snr0() * (10f64.powf(self.delta_db / 10.0) - 1.0)
    }

    /// `λ_Gram` multiplier for a data block of `n_d` symbols.
    pub fn gram_multiplier(&self, n_d: usize) -> f64 {
        self.n_d_adaptation
            .iter()
            .filter(|a| n_d >= a.min_n_d)
            .max_by_key(|a| a.min_n_d)
            .map_or(1.0, |a| a.multiplier)
    }
}

/// Effective number of noise-free samples behind a sample Gram estimate,
/// `κ = N_d (tr R̂)² / (tr R̂ + N_R σ_d²)²`. The Gram NMSE scales like `1/κ`
/// up to the effective-rank factor of `R`.
pub fn gram_reliability(trace: f64, n_r: usize, sigma2_d: f64, n_d: usize) -> f64 {
    if !(trace > 0.0) {
        return 0.0;
    }
    let total = trace + n_r as f64 * sigma2_d;
    n_d as f64 * (trace / total).powi(2)
}

/// `min(1, (κ/κ₀)^p)`: full strength once the estimate is reliable, falling
/// off polynomially below the knee.
pub fn reliability_multiplier(kappa: f64, kappa0: f64, exponent: f64) -> f64 {
    (kappa / kappa0).powf(exponent).min(1.0)
}

/// `(Ỹ − T(H̃_t)) / σ²`
pub fn likelihood_guidance(
    y_obs: &ComplexMatrix,
    tweedie_est: &ComplexMatrix,
    sigma2: f64,
) -> Result<ComplexMatrix> {
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateNoise(sigma2));
    }
    if y_obs.shape() != tweedie_est.shape() {
        return Err(Error::dim("observation and Tweedie estimate differ in shape"));
    }
    Ok((y_obs - tweedie_est).scale(1.0 / sigma2))
}

/// `f(H̃) = −‖H̃H̃^H − R̃‖_F²`
pub fn gram_objective(x: &ComplexMatrix, r_angular: &ComplexMatrix) -> f64 {
    -(&x.gram() - r_angular).fro_norm_sq()
}

/// `∇f = 4 (R̃ − H̃H̃^H) H̃`
pub fn gram_guidance(x: &ComplexMatrix, r_angular: &ComplexMatrix) -> Result<ComplexMatrix> {
    if r_angular.shape() != (x.rows(), x.rows()) {
        return Err(Error::dim(format!(
            "Gram target is {}x{}, state has {} rows",
            r_angular.rows(),
            r_angular.cols(),
            x.rows()
        )));
    }
    let residual = r_angular - &x.gram();
    Ok(residual.matmul(x)?.scale(4.0))
}

/// Logistic gate `1 / (1 + exp(−(snr − snr0)/Δ))`.
pub fn gate(snr_obs: f64, snr0: f64, delta: f64) -> f64 {
    let z = (snr_obs - snr0) / delta;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `λ_like · β_t · w(SNR)`, with `w ≡ 1` when gating is off.
pub fn lambda_like_at(t: usize, schedule: &NoiseSchedule, cfg: &GuidanceConfig, snr_obs: f64) -> f64 {
    let w = if cfg.gating_enabled {
        gate(snr_obs, cfg.snr0(), cfg.delta())
    } else {
        1.0
    };
    cfg.lambda_like * schedule.beta(t) * w
}

/// `λ_gram · √β_t`
pub fn lambda_gram_at(t: usize, schedule: &NoiseSchedule, cfg: &GuidanceConfig) -> f64 {
    cfg.lambda_gram * schedule.beta(t).sqrt()
}

/// `Δx · min(1, Th / (‖Δx‖_F + ε))`
pub fn clip_update(delta_x: &ComplexMatrix, th: f64, eps: f64) -> ComplexMatrix {
    let factor = (th / (delta_x.fro_norm() + eps)).min(1.0);
    if factor == 1.0 {
        delta_x.clone()
    } else {
        delta_x.scale(factor)
    }
}
