use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Linear,
    /// `ᾱ` follows a squared-cosine profile; `beta_end` caps each `β_t`.
    Cosine,
}

/// Parameters that fully determine a [`NoiseSchedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub t_max: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    #[serde(default)]
    pub kind: ScheduleKind,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            t_max: 300,
            beta_start: 1e-4,
            beta_end: 0.02,
            kind: ScheduleKind::Linear,
        }
    }
}

impl ScheduleParams {
    pub fn build(&self) -> Result<NoiseSchedule> {
        make_schedule(self.t_max, self.beta_start, self.beta_end, self.kind)
    }

    /// Hex SHA-256 over the canonical parameter string. Weight files carry it
    /// so a denoiser is never paired with a schedule it was not trained on.
    pub fn hash(&self) -> String {
        let canon = format!(
            "{:?}|{}|{:e}|{:e}",
            self.kind, self.t_max, self.beta_start, self.beta_end
        );
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Variance-preserving noise schedule for `t = 1..=T`. Index 0 is the clean
/// end with `ᾱ_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    beta: Vec<f64>,
    alpha_bar: Vec<f64>,
    snr_dm: Vec<f64>,
}

pub fn make_schedule(
    t_max: usize,
    beta_start: f64,
    beta_end: f64,
    kind: ScheduleKind,
) -> Result<NoiseSchedule> {
    if t_max == 0 {
        return Err(Error::Config("schedule needs at least one step".into()));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::Config(format!(
            "need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
        )));
    }
    let beta = match kind {
        ScheduleKind::Linear if t_max == 1 => vec![beta_start],
        ScheduleKind::Linear => (0..t_max)
            .map(|i| beta_start + (beta_end - beta_start) * i as f64 / (t_max - 1) as f64)
            .collect(),
        ScheduleKind::Cosine => {
            let offset = 0.008;
            let f = |t: usize| {
                let x = (t as f64 / t_max as f64 + offset) / (1.0 + offset) * FRAC_PI_2;
                x.cos().powi(2)
            };
            (1..=t_max)
                .map(|t| (1.0 - f(t) / f(t - 1)).clamp(beta_start, beta_end))
                .collect()
        }
    };
    NoiseSchedule::from_betas(beta)
}

impl NoiseSchedule {
    pub fn from_betas(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Config("empty beta sequence".into()));
        }
        if let Some(b) = beta.iter().find(|&&b| !(b > 0.0 && b <= 0.999)) {
            return Err(Error::Config(format!("beta {b} outside (0, 0.999]")));
        }
        let mut alpha_bar = Vec::with_capacity(beta.len() + 1);
        alpha_bar.push(1.0);
        let mut acc = 1.0;
        for b in &beta {
            acc *= 1.0 - b;
            alpha_bar.push(acc);
        }
        let snr_dm = alpha_bar.iter().map(|a| a / (1.0 - a)).collect();
        Ok(Self {
            beta,
            alpha_bar,
            snr_dm,
        })
    }

    pub fn t_max(&self) -> usize {
        self.beta.len()
    }

    /// `β_t`, `1 <= t <= T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.beta(t)
    }

    /// `ᾱ_t`, with `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    /// `ᾱ_t / (1 − ᾱ_t)`; infinite at `t = 0`.
    pub fn snr_dm(&self, t: usize) -> f64 {
        self.snr_dm[t]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }
}
