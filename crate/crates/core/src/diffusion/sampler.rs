use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Denoiser, NoiseSchedule};
use crate::rng::complex_normal_matrix;
use crate::{ComplexMatrix, Result};

/// How observation SNR is compared against the schedule SNR when picking t*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrMatch {
    /// `argmin |SNR_obs − SNR_DM(t)|` on the raw ratio.
    #[default]
    Raw,
    /// Same, in decibels.
    Db,
}

/// Step whose schedule SNR is closest to `snr_obs`; ties go to the smaller t.
pub fn match_t(snr_obs: f64, schedule: &NoiseSchedule, mode: SnrMatch) -> usize {
    let key = |s: f64| match mode {
        SnrMatch::Raw => s,
        SnrMatch::Db => 10.0 * s.log10(),
    };
    let target = key(snr_obs);
    let mut best_t = 1;
    let mut best = f64::INFINITY;
    for t in 1..=schedule.t_max() {
        let d = (target - key(schedule.snr_dm(t))).abs();
        if d < best {
            best = d;
            best_t = t;
        }
    }
    best_t
}

/// `T(x) = (x − √(1−ᾱ_t) ε̂) / √ᾱ_t` for a given noise prediction.
pub fn tweedie_from_noise(
    x: &ComplexMatrix,
    eps: &ComplexMatrix,
    t: usize,
    schedule: &NoiseSchedule,
) -> ComplexMatrix {
    let ab = schedule.alpha_bar(t);
    let mut out = x.clone();
    out.axpy(-(1.0 - ab).sqrt(), eps);
    out.scale_mut(1.0 / ab.sqrt());
    out
}

/// Tweedie estimate `E[H̃_0 | H̃_t]` through the backend's noise prediction.
pub fn tweedie<D: Denoiser + ?Sized>(
    x: &ComplexMatrix,
    t: usize,
    schedule: &NoiseSchedule,
    backend: &D,
) -> Result<ComplexMatrix> {
    let eps = backend.predict_noise(x, t, schedule)?;
    Ok(tweedie_from_noise(x, &eps, t, schedule))
}

/// The pieces of one reverse step, so guidance can reuse the Tweedie
/// estimate without a second backend call.
#[derive(Debug, Clone)]
pub struct DdimStep {
    /// `D_t(x)`, the unguided next state.
    pub next: ComplexMatrix,
    pub tweedie: ComplexMatrix,
    pub noise: ComplexMatrix,
}

pub fn ddim_step_parts<D: Denoiser + ?Sized>(
    x: &ComplexMatrix,
    t: usize,
    schedule: &NoiseSchedule,
    backend: &D,
) -> Result<DdimStep> {
    let noise = backend.predict_noise(x, t, schedule)?;
    let tweedie = tweedie_from_noise(x, &noise, t, schedule);
    let ab_prev = schedule.alpha_bar(t - 1);
    let mut next = tweedie.scale(ab_prev.sqrt());
    let w = (1.0 - ab_prev).sqrt();
    if w != 0.0 {
        next.axpy(w, &noise);
    }
    Ok(DdimStep {
        next,
        tweedie,
        noise,
    })
}

/// Deterministic reverse update
/// `H̃_{t−1} = √ᾱ_{t−1} T(H̃_t) + √(1−ᾱ_{t−1}) ε̂`.
pub fn ddim_step<D: Denoiser + ?Sized>(
    x: &ComplexMatrix,
    t: usize,
    schedule: &NoiseSchedule,
    backend: &D,
) -> Result<ComplexMatrix> {
    Ok(ddim_step_parts(x, t, schedule, backend)?.next)
}

/// `√ᾱ_t H̃_0 + √(1−ᾱ_t) η` with `η ~ CN(0, I)`; `t = 0` returns the input.
pub fn forward_diffuse<R: Rng + ?Sized>(
    h0: &ComplexMatrix,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> ComplexMatrix {
    let ab = schedule.alpha_bar(t);
    if ab == 1.0 {
        return h0.clone();
    }
    let mut out = h0.scale(ab.sqrt());
    out.axpy(
        (1.0 - ab).sqrt(),
        &complex_normal_matrix(rng, h0.rows(), h0.cols(), 1.0),
    );
    out
}
