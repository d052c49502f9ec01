//! Command-line front end. Every flag overrides the matching key of the
//! optional JSON config document.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gramdiff::channel::{generate_dataset, read_dataset, ChannelModel, LosChannelModel, Normalizer};
use gramdiff::diffusion::neural::{emit_goldens, golden_max_abs_error, read_goldens, write_goldens};
use gramdiff::diffusion::{NeuralDenoiser, ScheduleKind};
use gramdiff::estimators::{estimate_genie_lmmse, estimate_gramdiff, op_count_report, BackendSpec, GramSource, Variant};
use gramdiff::harness::{
    comparison_table, default_gm, gram_spectrum_stats, nmse_ch, read_cells, run_sweep, to_db, trial_channel,
    trial_frame, Config, Dims,
};
use gramdiff::linalg::dft2;
use gramdiff::link::Constellation;
use gramdiff::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const GOLDEN_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "gramdiff", version, about = "Gram-guided diffusion channel estimation simulator")]
struct Cli {
    /// JSON configuration document (sections: dims, channel_model, schedule, guidance, sweep).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a channel dataset and write it with its manifest.
    GenData {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit per-entry angular scales on a dataset.
    FitNorm {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo NMSE sweep; writes the aggregate CSV and a JSON summary.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Estimate one frame with every variant and print the NMSE.
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long, default_value_t = 2000)]
        n_d: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        master_seed: Option<u64>,
    },
    /// Eigen-spectrum statistics of the channel Gram matrix.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit or verify denoiser golden vectors.
    Goldens {
        #[command(subcommand)]
        action: GoldenAction,
    },
    /// Aggregate sweep CSVs into comparison tables.
    Report {
        csv: Vec<PathBuf>,
        #[arg(long, default_value = "dm")]
        reference: String,
    },
}

#[derive(Subcommand)]
enum GoldenAction {
    /// Run the weights on the fixed seeded inputs and record the outputs.
    Emit {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check the weights reproduce a golden file within 1e-4.
    Verify {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        goldens: PathBuf,
    },
    /// Write randomly initialized weights bound to the configured schedule.
    RandomWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        hidden: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Gm,
    Los,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    /// Channel family; `los` uses the cluster flags below.
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    los_clusters: Option<usize>,
    #[arg(long)]
    los_decay: Option<f64>,
    #[arg(long)]
    los_spread: Option<f64>,
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    #[arg(long, value_parser = ["linear", "cosine"])]
    schedule_kind: Option<String>,
    #[arg(long)]
    lambda_like: Option<f64>,
    #[arg(long)]
    lambda_gram: Option<f64>,
    #[arg(long)]
    clip_threshold: Option<f64>,
    #[arg(long)]
    clip_enabled: Option<bool>,
    #[arg(long)]
    gating_enabled: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    snr0_db: Option<f64>,
    #[arg(long)]
    delta_db: Option<f64>,
    #[arg(long)]
    reliability_kappa0: Option<f64>,
    /// `none`, `oracle` or `estimated`.
    #[arg(long, value_parser = ["none", "oracle", "estimated"])]
    gram_source: Option<String>,
    #[arg(long)]
    shrinkage: Option<f64>,
    /// Neural weights; the analytic GM denoiser is used otherwise.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_grid_db: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n_d_grid: Option<Vec<usize>>,
    #[arg(long)]
    n_trials: Option<usize>,
    /// Comma-separated variant tags (dm, dm+lik, dm+gram, gramdiff).
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    #[arg(long)]
    genie: Option<bool>,
    #[arg(long)]
    constellation: Option<String>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    raw_output: Option<PathBuf>,
    #[arg(long)]
    divergence_threshold: Option<usize>,
    /// Worker threads (overrides GRAMDIFF_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

fn load_config(path: Option<&Path>) -> gramdiff::Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

impl ModelArgs {
    fn apply(&self, cfg: &mut Config) -> gramdiff::Result<()> {
        if self.n_r.is_some() || self.n_t.is_some() {
            let dims = Dims {
                n_r: self.n_r.unwrap_or(cfg.dims.n_r),
                n_t: self.n_t.unwrap_or(cfg.dims.n_t),
            };
            *cfg = cfg.clone().with_dims(dims);
        }
        let dims = cfg.dims;
        match self.family {
            Some(Family::Gm) if cfg.channel_model.as_gm().is_none() => cfg.channel_model = default_gm(dims),
            Some(Family::Los) if !matches!(cfg.channel_model, ChannelModel::Los(_)) => {
                cfg.channel_model = ChannelModel::Los(LosChannelModel::default_for(dims.n_r, dims.n_t));
            }
            _ => {}
        }
        if let ChannelModel::Los(los) = &mut cfg.channel_model {
            if let Some(c) = self.los_clusters {
                los.clusters = c;
            }
            if let Some(d) = self.los_decay {
                los.decay = d;
            }
            if let Some(s) = self.los_spread {
                los.spread = s;
            }
        }
        cfg.channel_model.validate()
    }
}

impl EstimatorArgs {
    fn apply(&self, cfg: &mut Config) -> gramdiff::Result<()> {
        let s = &mut cfg.schedule;
        set(&mut s.t_max, self.t_max);
        set(&mut s.beta_start, self.beta_start);
        set(&mut s.beta_end, self.beta_end);
        if let Some(k) = &self.schedule_kind {
            s.kind = if k == "cosine" { ScheduleKind::Cosine } else { ScheduleKind::Linear };
        }
        let g = &mut cfg.guidance;
        set(&mut g.lambda_like, self.lambda_like);
        set(&mut g.lambda_gram, self.lambda_gram);
        set(&mut g.clip_threshold, self.clip_threshold);
        set(&mut g.clip_enabled, self.clip_enabled);
        set(&mut g.gating_enabled, self.gating_enabled);
        set(&mut g.snr0_db, self.snr0_db);
        set(&mut g.delta_db, self.delta_db);
        if self.reliability_kappa0.is_some() {
            g.reliability_kappa0 = self.reliability_kappa0;
        }
        if let Some(src) = &self.gram_source {
            cfg.sweep.gram_source = match src.as_str() {
                "none" => GramSource::None,
                "oracle" => GramSource::Oracle,
                _ => GramSource::Estimated,
            };
        }
        set(&mut cfg.sweep.shrinkage, self.shrinkage);
        if let Some(w) = &self.weights {
            cfg.sweep.backend = BackendSpec::Neural { path: w.clone() };
        }
        Ok(())
    }
}

impl SweepArgs {
    fn apply(&self, cfg: &mut Config) -> gramdiff::Result<()> {
        let s = &mut cfg.sweep;
        set(&mut s.snr_grid_db, self.snr_grid_db.clone());
        set(&mut s.n_d_grid, self.n_d_grid.clone());
        set(&mut s.n_trials, self.n_trials);
        if let Some(v) = &self.variants {
            s.variants = v.iter().map(|t| t.parse()).collect::<gramdiff::Result<_>>()?;
        }
        set(&mut s.genie, self.genie);
        if let Some(c) = &self.constellation {
            s.constellation = c.parse::<Constellation>()?;
        }
        set(&mut s.master_seed, self.master_seed);
        if self.output.is_some() {
            s.output = self.output.clone();
        }
        if self.raw_output.is_some() {
            s.raw_output = self.raw_output.clone();
        }
        if self.divergence_threshold.is_some() {
            s.divergence_threshold = self.divergence_threshold;
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

enum Failure {
    Lib(Error),
    Divergences { count: usize, threshold: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::GenData { model, count, seed, out } => {
            model.apply(&mut cfg)?;
            let manifest = generate_dataset(&cfg.channel_model, count, seed, &out)?;
            println!(
                "wrote {} channels ({}x{}) to {}",
                manifest.count,
                manifest.n_r,
                manifest.n_t,
                out.display()
            );
        }
        Command::FitNorm { data, out } => {
            let angular: Vec<_> = read_dataset(&data)?.iter().map(dft2).collect();
            let norm = Normalizer::fit(&angular)?;
            let text = serde_json::to_string_pretty(&norm).map_err(Error::from)?;
            std::fs::write(&out, text).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            println!("fitted {} scales on {} channels -> {}", norm.scale.len(), angular.len(), out.display());
        }
        Command::Sweep { model, est, sweep } => {
            model.apply(&mut cfg)?;
            est.apply(&mut cfg)?;
            sweep.apply(&mut cfg)?;
            cfg.validate()?;
            let mut spec = cfg.to_sweep_spec();
            spec.threads = sweep.threads;
            let backend = cfg.sweep.backend.load(&cfg.channel_model, &cfg.schedule)?;
            let result = run_sweep(&spec, &cfg.channel_model, backend.as_ref())?;
            if spec.output.is_none() {
                print!("{}", result.to_csv());
            } else {
                print!("{}", comparison_table(&result.cells, "dm"));
            }
            let count = result.divergences();
            if let Some(threshold) = cfg.sweep.divergence_threshold {
                if count > threshold {
                    return Err(Failure::Divergences { count, threshold });
                }
            }
        }
        Command::Estimate { model, est, snr_db, n_d, trial, master_seed } => {
            model.apply(&mut cfg)?;
            est.apply(&mut cfg)?;
            set(&mut cfg.sweep.master_seed, master_seed);
            cfg.validate()?;
            let spec = cfg.to_sweep_spec();
            let backend = cfg.sweep.backend.load(&cfg.channel_model, &cfg.schedule)?;
            let draw = trial_channel(&cfg.channel_model, spec.master_seed, trial);
            let frame = trial_frame(&draw.h, snr_db, n_d, trial, &spec)?;
            println!("SNR {snr_db} dB, N_d {n_d}, trial {trial}");
            for v in Variant::ALL {
                let ecfg = cfg.estimator_config(v);
                match estimate_gramdiff(&frame, backend.as_ref(), &ecfg, Some(&draw.h)) {
                    Ok(e) => {
                        let nmse = nmse_ch(&draw.h, &e.h_hat)?;
                        let ops = op_count_report(&ecfg, draw.h.shape(), frame.sigma2, n_d)?;
                        println!(
                            "{:>12}  NMSE {:.6} ({:+.2} dB)  t*={} denoiser={} lik={} gram={} gram-flops={}+{}/step",
                            v.tag(),
                            nmse,
                            to_db(nmse),
                            e.t_star,
                            e.denoiser_evals,
                            e.likelihood_evals,
                            e.gram_evals,
                            ops.gram_estimation_flops,
                            ops.gram_step_flops,
                        );
                    }
                    Err(Error::Divergence { step }) => println!("{:>12}  diverged at t={step}", v.tag()),
                    Err(e) => return Err(e.into()),
                }
            }
            if let (Some(gm), Some(k)) = (cfg.channel_model.as_gm(), draw.component) {
                let h = estimate_genie_lmmse(&frame, gm, k)?;
                let nmse = nmse_ch(&draw.h, &h)?;
                println!("{:>12}  NMSE {:.6} ({:+.2} dB)", "genie-lmmse", nmse, to_db(nmse));
            }
        }
        Command::Spectrum { model, samples, seed } => {
            model.apply(&mut cfg)?;
            let stats = gram_spectrum_stats(&cfg.channel_model, samples, seed)?;
            println!("{}", serde_json::to_string_pretty(&stats).map_err(Error::from)?);
        }
        Command::Goldens { action } => match action {
            GoldenAction::Emit { weights, out, seed } => {
                let net = NeuralDenoiser::load_for_schedule(&weights, &cfg.schedule.hash())?;
                let goldens = emit_goldens(&net, cfg.schedule.t_max, seed)?;
                write_goldens(&out, &goldens)?;
                println!("wrote {} goldens to {}", goldens.len(), out.display());
            }
            GoldenAction::Verify { weights, goldens } => {
                let net = NeuralDenoiser::load_for_schedule(&weights, &cfg.schedule.hash())?;
                let g = read_goldens(&goldens)?;
                let err = golden_max_abs_error(&net, &g, cfg.schedule.t_max)?;
                println!("max abs error {err:.3e} over {} goldens", g.len());
                if !(err <= GOLDEN_TOLERANCE) {
                    return Err(Error::Checksum(format!("golden mismatch {err:.3e} > {GOLDEN_TOLERANCE:e}")).into());
                }
            }
            GoldenAction::RandomWeights { out, hidden, seed } => {
                let net = NeuralDenoiser::random(cfg.dims.n_r, cfg.dims.n_t, hidden, seed)
                    .with_schedule_hash(cfg.schedule.hash());
                net.save(&out)?;
                println!("wrote random {}x{} weights (hidden {hidden}) to {}", cfg.dims.n_r, cfg.dims.n_t, out.display());
            }
        },
        Command::Report { csv, reference } => {
            if csv.is_empty() {
                return Err(Error::Config("report needs at least one CSV".into()).into());
            }
            let mut cells = Vec::new();
            for path in &csv {
                cells.extend(read_cells(path)?);
            }
            print!("{}", comparison_table(&cells, &reference));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Divergences { count, threshold }) => {
            eprintln!("error: {count} divergences exceed the threshold of {threshold}");
            ExitCode::from(EXIT_DIVERGENCE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Json(_) | Error::InvalidDimension(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
