//! The guided diffusion estimator, its ablations and the Genie-LMMSE bound.
//!
//! All four diffusion variants run the same loop; the variant tag only
//! decides which guidance scales are allowed to be non-zero. A guidance term
//! whose scale is zero is skipped outright rather than added as `0·g`, so the
//! nested variants agree bit for bit.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, GmChannelModel};
use crate::diffusion::{
    ddim_step_parts, match_t, AnalyticGmDenoiser, Denoiser, NeuralDenoiser, ScheduleParams,
    SnrMatch,
};
use crate::gram::{oracle_gram, sample_gram, GramEstimate};
use crate::guidance::{
    clip_update, gram_guidance, gram_reliability, lambda_gram_at, lambda_like_at,
    likelihood_guidance, reliability_multiplier, GuidanceConfig,
};
use crate::linalg::{hermitian_eig, idft2};
use crate::link::Frame;
use crate::preproc::{to_angular_observation, AngularObservation};
use crate::{ComplexMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "dm")]
    Dm,
    #[serde(rename = "dm+lik")]
    DmLik,
    #[serde(rename = "dm+gram")]
    DmGram,
    #[serde(rename = "gramdiff")]
    GramDiff,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Dm, Variant::DmLik, Variant::DmGram, Variant::GramDiff];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::Dm => "dm",
            Variant::DmLik => "dm+lik",
            Variant::DmGram => "dm+gram",
            Variant::GramDiff => "gramdiff",
        }
    }

    fn uses_likelihood(self) -> bool {
        matches!(self, Variant::DmLik | Variant::GramDiff)
    }

    fn uses_gram(self) -> bool {
        matches!(self, Variant::DmGram | Variant::GramDiff)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// Exact posterior mean of the GM prior the channels are drawn from.
    #[default]
    AnalyticGm,
    /// A `cnn3-film-v1` weight file.
    Neural { path: PathBuf },
}

impl BackendSpec {
    /// Instantiates the backend; analytic needs a GM channel model, neural
    /// weights must carry the schedule's hash.
    pub fn load(&self, model: &ChannelModel, schedule: &ScheduleParams) -> Result<Box<dyn Denoiser>> {
        match self {
            BackendSpec::AnalyticGm => {
                let gm = model.as_gm().ok_or_else(|| {
                    Error::Config("the analytic backend needs a GM channel model".into())
                })?;
                Ok(Box::new(AnalyticGmDenoiser::new(gm.clone())?))
            }
            BackendSpec::Neural { path } => {
                let net = NeuralDenoiser::load_for_schedule(path, &schedule.hash())?;
                if net.dims() != model.dims() {
                    return Err(Error::Config(format!(
                        "weights are {:?}, channel model is {:?}",
                        net.dims(),
                        model.dims()
                    )));
                }
                Ok(Box::new(net))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GramSource {
    None,
    /// `HH^H` of the true channel.
    Oracle,
    /// Sample Gram of the frame's data block, shrunk by `shrinkage`.
    #[default]
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub variant: Variant,
    #[serde(default)]
    pub schedule: ScheduleParams,
    #[serde(default)]
    pub guidance: GuidanceConfig,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub gram_source: GramSource,
    #[serde(default)]
    pub shrinkage: f64,
    #[serde(default)]
    pub snr_match: SnrMatch,
    #[serde(default)]
    pub seed: u64,
}

impl EstimatorConfig {
    /// Defaults for `variant`, with the guidance scales the variant excludes
    /// set to zero.
    pub fn for_variant(variant: Variant) -> Self {
        Self {
            variant,
            schedule: ScheduleParams::default(),
            guidance: GuidanceConfig::default(),
            backend: BackendSpec::AnalyticGm,
            gram_source: if variant.uses_gram() {
                GramSource::Estimated
            } else {
                GramSource::None
            },
            shrinkage: 0.0,
            snr_match: SnrMatch::Raw,
            seed: 0,
        }
        .conformed()
    }

    /// Zeroes the scales the variant tag excludes.
    pub fn conformed(mut self) -> Self {
        if !self.variant.uses_likelihood() {
            self.guidance.lambda_like = 0.0;
        }
        if !self.variant.uses_gram() {
            self.guidance.lambda_gram = 0.0;
        }
        self
    }

    /// Copy with a different tag, scales conformed to it and the Gram source
    /// kept.
    pub fn as_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
        .conformed()
    }

    pub fn validate(&self) -> Result<()> {
        self.guidance.validate()?;
        self.schedule.build()?;
        if !self.variant.uses_likelihood() && self.guidance.lambda_like != 0.0 {
            return Err(Error::Config(format!(
                "variant {} must have lambda_like = 0",
                self.variant
            )));
        }
        if !self.variant.uses_gram() && self.guidance.lambda_gram != 0.0 {
            return Err(Error::Config(format!(
                "variant {} must have lambda_gram = 0",
                self.variant
            )));
        }
        if self.guidance.lambda_gram != 0.0 && self.gram_source == GramSource::None {
            return Err(Error::Config("Gram guidance needs a Gram source".into()));
        }
        if !(0.0..=1.0).contains(&self.shrinkage) {
            return Err(Error::Config(format!("shrinkage {} outside [0, 1]", self.shrinkage)));
        }
        Ok(())
    }

    /// `λ_gram` after the data-length adaptation; the table applies to
    /// estimated Gram matrices only.
    pub fn effective_lambda_gram(&self, n_d: usize) -> f64 {
        match self.gram_source {
            GramSource::None => 0.0,
            GramSource::Oracle => self.guidance.lambda_gram,
            GramSource::Estimated => self.guidance.lambda_gram * self.guidance.gram_multiplier(n_d),
        }
    }
}

/// Result of one estimation together with the work it took.
#[derive(Debug, Clone)]
pub struct Estimate {
    /// Spatial-domain channel estimate.
    pub h_hat: ComplexMatrix,
    /// Starting step; 0 when the observation was noiseless.
    pub t_star: usize,
    pub denoiser_evals: usize,
    pub likelihood_evals: usize,
    pub gram_evals: usize,
    pub gram: Option<GramEstimate>,
    /// `λ_gram` actually applied (after adaptation and degeneracy fallback).
    pub lambda_gram: f64,
}

/// Runs the guided reverse diffusion on one frame.
///
/// `truth` is consulted only when the Gram source is the oracle.
pub fn estimate_gramdiff<D: Denoiser + ?Sized>(
    frame: &Frame,
    backend: &D,
    cfg: &EstimatorConfig,
    truth: Option<&ComplexMatrix>,
) -> Result<Estimate> {
    cfg.validate()?;
    let schedule = cfg.schedule.build()?;
    let obs = to_angular_observation(&frame.y_p, &frame.x_p, frame.sigma2)?;

    if obs.sigma2 == 0.0 {
        return Ok(Estimate {
            h_hat: idft2(&obs.y_angular),
            t_star: 0,
            denoiser_evals: 0,
            likelihood_evals: 0,
            gram_evals: 0,
            gram: None,
            lambda_gram: 0.0,
        });
    }

    let t_star = match_t(obs.snr, &schedule, cfg.snr_match);
    let lambda_like = cfg.guidance.lambda_like;
    let mut lambda_gram = cfg.effective_lambda_gram(frame.n_d);

    let gram = if lambda_gram > 0.0 {
        let g = match cfg.gram_source {
            GramSource::None => unreachable!("validated"),
            GramSource::Oracle => {
                let h = truth.ok_or_else(|| {
                    Error::Precondition("oracle Gram requested without the true channel".into())
                })?;
                oracle_gram(h)
            }
            GramSource::Estimated => sample_gram(&frame.y_d, frame.sigma2_d, cfg.shrinkage)?,
        };
        if g.low_confidence {
            lambda_gram = 0.0;
        } else if let (GramSource::Estimated, Some(k0)) =
            (cfg.gram_source, cfg.guidance.reliability_kappa0)
        {
            let kappa = gram_reliability(g.r_spatial.trace().re, g.r_spatial.rows(), frame.sigma2_d, frame.n_d);
            lambda_gram *= reliability_multiplier(kappa, k0, cfg.guidance.reliability_exponent);
        }
        Some(g)
    } else {
        None
    };
    let guide = GuidanceConfig {
        lambda_gram,
        ..cfg.guidance.clone()
    };

    let mut x = obs.y_tilde.clone();
    let mut counts = (0, 0, 0);
    for t in (1..=t_star).rev() {
        let step = ddim_step_parts(&x, t, &schedule, backend)?;
        counts.0 += 1;
        let mut next = step.next;
        if lambda_like > 0.0 {
            let g = likelihood_guidance(&obs.y_angular, &step.tweedie, obs.sigma2)?;
            next.axpy(lambda_like_at(t, &schedule, &guide, obs.snr), &g);
            counts.1 += 1;
        }
        if lambda_gram > 0.0 {
            let r = &gram.as_ref().expect("set with lambda_gram").r_angular;
            let mut delta = gram_guidance(&x, r)?;
            delta.scale_mut(lambda_gram_at(t, &schedule, &guide));
            if guide.clip_enabled {
                delta = clip_update(&delta, guide.clip_threshold, guide.clip_epsilon);
            }
            next += &delta;
            counts.2 += 1;
        }
        if !next.is_finite() {
            return Err(Error::Divergence { step: t });
        }
        x = next;
    }

    Ok(Estimate {
        h_hat: idft2(&x),
        t_star,
        denoiser_evals: counts.0,
        likelihood_evals: counts.1,
        gram_evals: counts.2,
        gram,
        lambda_gram,
    })
}

/// Per-entry LMMSE with the generating component's covariance revealed:
/// `ĥ_i = c_i / (c_i + σ²) · ỹ_i`, mapped back to the spatial domain.
pub fn estimate_genie_lmmse(
    frame: &Frame,
    gm: &GmChannelModel,
    component: usize,
) -> Result<ComplexMatrix> {
    let comp = gm.components.get(component).ok_or_else(|| {
        Error::Precondition(format!(
            "component index {component} out of range ({} components)",
            gm.components.len()
        ))
    })?;
    let obs = to_angular_observation(&frame.y_p, &frame.x_p, frame.sigma2)?;
    if obs.y_angular.shape() != (gm.n_r, gm.n_t) {
        return Err(Error::dim("frame and mixture dimensions differ"));
    }
    Ok(idft2(&genie_lmmse_angular(&obs, &comp.variances)))
}

/// Diagonal-covariance LMMSE in the angular domain.
pub fn genie_lmmse_angular(obs: &AngularObservation, variances: &[f64]) -> ComplexMatrix {
    let s2 = obs.sigma2;
    let data = obs
        .y_angular
        .data()
        .iter()
        .zip(variances)
        .map(|(y, &c)| if s2 == 0.0 { *y } else { y * (c / (c + s2)) })
        .collect();
    ComplexMatrix::new(obs.y_angular.rows(), obs.y_angular.cols(), data).expect("same shape")
}

/// `C (C + σ²I)^{-1} y` for a dense Hermitian covariance over the row-major
/// vectorization of the angular observation.
pub fn genie_lmmse_dense(y_angular: &ComplexMatrix, cov: &ComplexMatrix, sigma2: f64) -> Result<ComplexMatrix> {
    let n = y_angular.len();
    if cov.shape() != (n, n) {
        return Err(Error::dim(format!("covariance must be {n}x{n}")));
    }
    let eig = hermitian_eig(cov)?;
    let filter = eig.reconstruct_with(|l| {
        let l = l.max(0.0);
        if l + sigma2 > 0.0 {
            l / (l + sigma2)
        } else {
            0.0
        }
    });
    let y = ComplexMatrix::new(n, 1, y_angular.data().to_vec())?;
    let h = filter.matmul(&y)?;
    ComplexMatrix::new(y_angular.rows(), y_angular.cols(), h.into_data())
}

/// Online work of one estimation, predicted from the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCountReport {
    pub t_star: usize,
    pub denoiser_evals: usize,
    pub likelihood_evals: usize,
    pub gram_evals: usize,
    /// Complex multiply-accumulates of `Y_d Y_d^H`, `N_R² N_d`.
    pub gram_estimation_flops: u64,
    /// Complex multiply-accumulates of one `(R − HH^H)H`, `2 N_R² N_T`.
    pub gram_step_flops: u64,
}

/// Predicts the counts `estimate_gramdiff` will report, assuming the Gram
/// estimate is not degenerate.
pub fn op_count_report(
    cfg: &EstimatorConfig,
    dims: (usize, usize),
    sigma2: f64,
    n_d: usize,
) -> Result<OpCountReport> {
    cfg.validate()?;
    let (n_r, n_t) = dims;
    if n_r == 0 || n_t == 0 {
        return Err(Error::dim("dimensions must be positive"));
    }
    let schedule = cfg.schedule.build()?;
    let t_star = if sigma2 > 0.0 {
        match_t(1.0 / sigma2, &schedule, cfg.snr_match)
    } else {
        0
    };
    let gram_on = cfg.effective_lambda_gram(n_d) > 0.0;
    let estimated = gram_on && cfg.gram_source == GramSource::Estimated;
    let (n_r, n_t, n_d) = (n_r as u64, n_t as u64, n_d as u64);
    Ok(OpCountReport {
        t_star,
        denoiser_evals: t_star,
        likelihood_evals: if cfg.guidance.lambda_like > 0.0 { t_star } else { 0 },
        gram_evals: if gram_on { t_star } else { 0 },
        gram_estimation_flops: if estimated { n_r * n_r * n_d } else { 0 },
        gram_step_flops: if gram_on { 2 * n_r * n_r * n_t } else { 0 },
    })
}
