//! NMSE versus SNR for all estimators on the default mixture.
//!
//!     cargo run --release --example snr_sweep -- [trials] [out.csv]

use std::path::PathBuf;

use gramdiff::diffusion::AnalyticGmDenoiser;
use gramdiff::harness::{comparison_table, run_sweep, Config};

fn main() -> gramdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = Config::default();
    cfg.sweep.n_trials = args.next().map_or(100, |a| a.parse().expect("trial count"));
    cfg.sweep.output = args.next().map(PathBuf::from);

    let backend = AnalyticGmDenoiser::new(cfg.channel_model.as_gm().unwrap().clone())?;
    let result = run_sweep(&cfg.to_sweep_spec(), &cfg.channel_model, &backend)?;
    print!("{}", comparison_table(&result.cells, "dm"));
    println!("divergences: {}", result.divergences());
    Ok(())
}
