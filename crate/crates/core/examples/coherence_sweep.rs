//! Short coherence intervals: Gram-guided diffusion against the
//! likelihood-only fallback as the data block shrinks.
//!
//!     cargo run --release --example coherence_sweep -- [trials]

use gramdiff::diffusion::AnalyticGmDenoiser;
use gramdiff::estimators::Variant;
use gramdiff::harness::{comparison_table, run_sweep, Config};

fn main() -> gramdiff::Result<()> {
    let mut cfg = Config::default();
    cfg.sweep.n_trials = std::env::args().nth(1).map_or(100, |a| a.parse().expect("trial count"));
    cfg.sweep.n_d_grid = vec![5, 20, 200, 2000];
    cfg.sweep.variants = vec![Variant::Dm, Variant::DmLik, Variant::GramDiff];
    cfg.sweep.genie = false;

    let backend = AnalyticGmDenoiser::new(cfg.channel_model.as_gm().unwrap().clone())?;
    let result = run_sweep(&cfg.to_sweep_spec(), &cfg.channel_model, &backend)?;
    print!("{}", comparison_table(&result.cells, "dm+lik"));

    let mut worst: f64 = 0.0;
    for c in result.cells.iter().filter(|c| c.variant == "gramdiff") {
        let base = result.cell("dm+lik", c.snr_db, c.n_d).unwrap();
        worst = worst.max(c.nmse_mean / base.nmse_mean);
    }
    println!("worst gramdiff / dm+lik ratio: {worst:.4}");
    Ok(())
}
