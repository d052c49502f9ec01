use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::diffusion::Denoiser;
use crate::estimators::{estimate_genie_lmmse, estimate_gramdiff, EstimatorConfig};
use crate::gram::gram_nmse;
use crate::link::{make_data, make_pilots, sigma2_from_snr_db, transmit, Constellation, Frame, PilotKind};
use crate::rng::stream;
use crate::{ComplexMatrix, Error, Result};

use super::metrics::{matrix_hash, mean_stderr, nmse_ch};

pub const GENIE_TAG: &str = "genie-lmmse";
pub const CSV_HEADER: &str = "variant,snr_db,n_d,trials,nmse_mean,nmse_stderr,divergences,mean_tstar";
/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GRAMDIFF_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub snr_grid_db: Vec<f64>,
    pub n_d_grid: Vec<usize>,
    pub n_trials: usize,
    pub variants: Vec<EstimatorConfig>,
    pub genie: bool,
    pub pilots: PilotKind,
    pub constellation: Constellation,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    pub raw_output: Option<PathBuf>,
    /// Worker count; falls back to `GRAMDIFF_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() || self.n_d_grid.is_empty() {
            return Err(Error::Config("SNR and N_d grids must be non-empty".into()));
        }
        if self.variants.is_empty() && !self.genie {
            return Err(Error::Config("nothing to evaluate".into()));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Config("SNR grid contains NaN".into()));
        }
        for v in &self.variants {
            v.validate()?;
        }
        Ok(())
    }
}

/// One estimator on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: String,
    pub snr_db: f64,
    pub n_d: usize,
    pub trial: usize,
    /// `None` when the trajectory diverged.
    pub nmse_ch: Option<f64>,
    pub gram_nmse: Option<f64>,
    pub t_star: usize,
    pub diverged: bool,
    pub wall_time_s: f64,
    pub h_hash: String,
}

/// Aggregate over the trials of one (variant, SNR, N_d) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub variant: String,
    pub snr_db: f64,
    pub n_d: usize,
    pub trials: usize,
    pub nmse_mean: f64,
    pub nmse_stderr: f64,
    pub divergences: usize,
    pub mean_tstar: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
}

impl SweepResult {
    pub fn divergences(&self) -> usize {
        self.cells.iter().map(|c| c.divergences).sum()
    }

    pub fn cell(&self, variant: &str, snr_db: f64, n_d: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.snr_db == snr_db && c.n_d == n_d)
    }

    /// The aggregate table; byte-identical for identical specs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{:.10e},{:.10e},{},{:.4}",
                c.variant, c.snr_db, c.n_d, c.trials, c.nmse_mean, c.nmse_stderr, c.divergences, c.mean_tstar
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn write_raw_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        write_atomic(path, &bytes)
    }

    pub fn write_summary(&self, path: &Path, spec: &SweepSpec) -> Result<()> {
        let doc = serde_json::json!({
            "master_seed": spec.master_seed,
            "n_trials": spec.n_trials,
            "snr_grid_db": spec.snr_grid_db,
            "n_d_grid": spec.n_d_grid,
            "variants": spec.variants,
            "divergences": self.divergences(),
            "cells": self.cells,
        });
        write_atomic(path, serde_json::to_string_pretty(&doc)?.as_bytes())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Channel of trial `trial`: shared by every cell and variant.
pub fn trial_channel(model: &ChannelModel, master_seed: u64, trial: usize) -> crate::channel::ChannelDraw {
    model.sample(&mut stream(master_seed, &[0, trial as u64]))
}

/// Frame of trial `trial` in one (SNR, N_d) cell; identical across variants.
pub fn trial_frame(
    h: &ComplexMatrix,
    snr_db: f64,
    n_d: usize,
    trial: usize,
    spec: &SweepSpec,
) -> Result<Frame> {
    let mut rng = stream(spec.master_seed, &[1, snr_db.to_bits(), n_d as u64, trial as u64]);
    let x_p = make_pilots(h.cols(), spec.pilots)?;
    let x_d = make_data(h.cols(), n_d, spec.constellation, &mut rng);
    let s2 = sigma2_from_snr_db(snr_db);
    transmit(h, &x_p, &x_d, s2, s2, &mut rng)
}

fn worker_count(spec: &SweepSpec) -> Option<usize> {
    spec.threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&n: &usize| n > 0)
    })
}

fn run_trial<D: Denoiser + ?Sized>(
    spec: &SweepSpec,
    model: &ChannelModel,
    backend: &D,
    snr_db: f64,
    n_d: usize,
    trial: usize,
) -> Result<Vec<RunRecord>> {
    let draw = trial_channel(model, spec.master_seed, trial);
    let h = &draw.h;
    let h_hash = matrix_hash(h);
    let frame = trial_frame(h, snr_db, n_d, trial, spec)?;
    let mut out = Vec::with_capacity(spec.variants.len() + 1);

    for cfg in &spec.variants {
        let start = Instant::now();
        let record = |nmse, gram_nmse, t_star, diverged| RunRecord {
            variant: cfg.variant.tag().to_string(),
            snr_db,
            n_d,
            trial,
            nmse_ch: nmse,
            gram_nmse,
            t_star,
            diverged,
            wall_time_s: start.elapsed().as_secs_f64(),
            h_hash: h_hash.clone(),
        };
        match estimate_gramdiff(&frame, backend, cfg, Some(h)) {
            Ok(est) => {
                let g = match &est.gram {
                    Some(g) if g.source == crate::gram::GramProvenance::Estimated => {
                        Some(gram_nmse(&g.r_spatial, &h.gram())?)
                    }
                    _ => None,
                };
                out.push(record(Some(nmse_ch(h, &est.h_hat)?), g, est.t_star, false));
            }
            Err(Error::Divergence { .. }) => {
                let t = crate::estimators::op_count_report(cfg, h.shape(), frame.sigma2, n_d)?.t_star;
                out.push(record(None, None, t, true));
            }
            Err(e) => return Err(e),
        }
    }

    if spec.genie {
        if let (Some(gm), Some(k)) = (model.as_gm(), draw.component) {
            let start = Instant::now();
            let est = estimate_genie_lmmse(&frame, gm, k)?;
            out.push(RunRecord {
                variant: GENIE_TAG.to_string(),
                snr_db,
                n_d,
                trial,
                nmse_ch: Some(nmse_ch(h, &est)?),
                gram_nmse: None,
                t_star: 0,
                diverged: false,
                wall_time_s: start.elapsed().as_secs_f64(),
                h_hash,
            });
        }
    }
    Ok(out)
}

/// Runs every (SNR, N_d, trial) with paired realizations across variants and
/// aggregates per cell. Output order is fixed by the `SweepSpec`, never by
/// scheduling. Writes the CSV, JSON summary and raw records when the sweep
/// names an output path.
pub fn run_sweep<D: Denoiser + ?Sized>(
    spec: &SweepSpec,
    model: &ChannelModel,
    backend: &D,
) -> Result<SweepResult> {
    spec.validate()?;
    model.validate()?;

    let jobs: Vec<(f64, usize, usize)> = spec
        .snr_grid_db
        .iter()
        .flat_map(|&s| {
            spec.n_d_grid
                .iter()
                .flat_map(move |&n| (0..spec.n_trials).map(move |t| (s, n, t)))
        })
        .collect();

    let run = || -> Result<Vec<Vec<RunRecord>>> {
        jobs.par_iter()
            .map(|&(s, n, t)| run_trial(spec, model, backend, s, n, t))
            .collect()
    };
    let per_trial = match worker_count(spec) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let records: Vec<RunRecord> = per_trial.into_iter().flatten().collect();

    let mut labels: Vec<String> = spec.variants.iter().map(|v| v.variant.tag().to_string()).collect();
    if spec.genie && model.as_gm().is_some() {
        labels.push(GENIE_TAG.to_string());
    }
    let mut cells = Vec::new();
    for label in &labels {
        for &snr in &spec.snr_grid_db {
            for &n_d in &spec.n_d_grid {
                let rs: Vec<&RunRecord> = records
                    .iter()
                    .filter(|r| &r.variant == label && r.snr_db == snr && r.n_d == n_d)
                    .collect();
                let nmse: Vec<f64> = rs.iter().filter_map(|r| r.nmse_ch).collect();
                let (mean, stderr) = mean_stderr(&nmse);
                cells.push(CellSummary {
                    variant: label.clone(),
                    snr_db: snr,
                    n_d,
                    trials: rs.len(),
                    nmse_mean: mean,
                    nmse_stderr: stderr,
                    divergences: rs.iter().filter(|r| r.diverged).count(),
                    mean_tstar: rs.iter().map(|r| r.t_star as f64).sum::<f64>() / rs.len() as f64,
                });
            }
        }
    }

    let result = SweepResult { records, cells };
    if let Some(path) = &spec.output {
        result.write_csv(path)?;
        result.write_summary(&path.with_extension("json"), spec)?;
    }
    if let Some(path) = &spec.raw_output {
        result.write_raw_csv(path)?;
    }
    Ok(result)
}
