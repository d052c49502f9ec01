use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, GmChannelModel};
use crate::diffusion::{ScheduleParams, SnrMatch};
use crate::estimators::{BackendSpec, EstimatorConfig, GramSource, Variant};
use crate::guidance::GuidanceConfig;
use crate::link::{Constellation, PilotKind};
use crate::{Error, Result};

use super::SweepSpec;

/// Profile seed of the default mixture; part of the default configuration.
pub const DEFAULT_GM_SEED: u64 = 1;
pub const DEFAULT_GM_COMPONENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n_r: usize,
    pub n_t: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self { n_r: 16, n_t: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub snr_grid_db: Vec<f64>,
    pub n_d_grid: Vec<usize>,
    pub n_trials: usize,
    pub variants: Vec<Variant>,
    /// Adds a Genie-LMMSE row per cell (GM family only).
    pub genie: bool,
    pub gram_source: GramSource,
    pub shrinkage: f64,
    pub backend: BackendSpec,
    pub snr_match: SnrMatch,
    pub pilots: PilotKind,
    pub constellation: Constellation,
    pub master_seed: u64,
    /// Aggregate CSV; a JSON summary is written next to it.
    pub output: Option<PathBuf>,
    /// Optional per-trial CSV.
    pub raw_output: Option<PathBuf>,
    /// Exceeding this many divergences makes the CLI exit with status 3.
    pub divergence_threshold: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_grid_db: vec![-15.0, -10.0, -5.0, 0.0, 5.0],
            n_d_grid: vec![2000],
            n_trials: 500,
            variants: Variant::ALL.to_vec(),
            genie: true,
            gram_source: GramSource::Estimated,
            shrinkage: 0.0,
            backend: BackendSpec::AnalyticGm,
            snr_match: SnrMatch::Raw,
            pilots: PilotKind::Dft,
            constellation: Constellation::Qpsk,
            master_seed: 2024,
            output: None,
            raw_output: None,
            divergence_threshold: None,
        }
    }
}

/// The complete configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub dims: Dims,
    pub channel_model: ChannelModel,
    pub schedule: ScheduleParams,
    pub guidance: GuidanceConfig,
    pub sweep: SweepSection,
}

impl Default for Config {
    fn default() -> Self {
        let dims = Dims::default();
        Self {
            channel_model: default_gm(dims),
            dims,
            schedule: ScheduleParams::default(),
            guidance: GuidanceConfig::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// The default clustered mixture at the given dimensions.
pub fn default_gm(dims: Dims) -> ChannelModel {
    ChannelModel::Gm(GmChannelModel::clustered(
        dims.n_r,
        dims.n_t,
        DEFAULT_GM_COMPONENTS,
        DEFAULT_GM_SEED,
    ))
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.channel_model.validate()?;
        let (n_r, n_t) = self.channel_model.dims();
        if (n_r, n_t) != (self.dims.n_r, self.dims.n_t) {
            return Err(Error::Config(format!(
                "dims say {}x{}, channel model is {n_r}x{n_t}",
                self.dims.n_r, self.dims.n_t
            )));
        }
        self.schedule.build()?;
        self.guidance.validate()?;
        for v in self.estimator_configs() {
            v.validate()?;
        }
        self.to_sweep_spec().validate()
    }

    /// Replaces the channel model by the default mixture at new dimensions.
    pub fn with_dims(mut self, dims: Dims) -> Self {
        self.dims = dims;
        self.channel_model = match &self.channel_model {
            ChannelModel::Los(los) => ChannelModel::Los(crate::channel::LosChannelModel {
                n_r: dims.n_r,
                n_t: dims.n_t,
                ..los.clone()
            }),
            ChannelModel::Gm(_) => default_gm(dims),
        };
        self
    }

    pub fn estimator_config(&self, variant: Variant) -> EstimatorConfig {
        EstimatorConfig {
            variant,
            schedule: self.schedule,
            guidance: self.guidance.clone(),
            backend: self.sweep.backend.clone(),
            gram_source: if matches!(variant, Variant::Dm | Variant::DmLik) {
                GramSource::None
            } else {
                self.sweep.gram_source
            },
            shrinkage: self.sweep.shrinkage,
            snr_match: self.sweep.snr_match,
            seed: self.sweep.master_seed,
        }
        .conformed()
    }

    pub fn estimator_configs(&self) -> Vec<EstimatorConfig> {
        self.sweep
            .variants
            .iter()
            .map(|&v| self.estimator_config(v))
            .collect()
    }

    pub fn to_sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            snr_grid_db: self.sweep.snr_grid_db.clone(),
            n_d_grid: self.sweep.n_d_grid.clone(),
            n_trials: self.sweep.n_trials,
            variants: self.estimator_configs(),
            genie: self.sweep.genie && self.channel_model.as_gm().is_some(),
            pilots: self.sweep.pilots,
            constellation: self.sweep.constellation,
            master_seed: self.sweep.master_seed,
            output: self.sweep.output.clone(),
            raw_output: self.sweep.raw_output.clone(),
            threads: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        let back: Config = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_document_fills_defaults() {
        let cfg: Config = serde_json::from_str(r#"{"sweep": {"n_trials": 3}}"#).unwrap();
        assert_eq!(cfg.sweep.n_trials, 3);
        assert_eq!(cfg.dims, Dims::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn dims_must_agree_with_model() {
        let mut cfg = Config::default();
        cfg.dims = Dims { n_r: 8, n_t: 4 };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = Config::default().with_dims(Dims { n_r: 8, n_t: 2 });
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_in_variants_are_rejected() {
        let bad = serde_json::from_str::<Config>(r#"{"sweep": {"variants": ["dm", "bogus"]}}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn estimator_configs_follow_variant_tags() {
        let cfg = Config::default();
        let dm = cfg.estimator_config(Variant::Dm);
        assert_eq!(dm.gram_source, GramSource::None);
        assert_eq!(dm.guidance.lambda_like, 0.0);
        let g = cfg.estimator_config(Variant::GramDiff);
        assert_eq!(g.guidance, cfg.guidance);
    }
}
