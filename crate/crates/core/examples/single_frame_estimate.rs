//! One frame through every estimator, with the work each one did.

use gramdiff::diffusion::CountingDenoiser;
use gramdiff::estimators::{estimate_genie_lmmse, estimate_gramdiff, Variant};
use gramdiff::diffusion::AnalyticGmDenoiser;
use gramdiff::harness::{nmse_ch, to_db, trial_channel, trial_frame, Config};

fn main() -> gramdiff::Result<()> {
    let cfg = Config::default();
    let spec = cfg.to_sweep_spec();
    let gm = cfg.channel_model.as_gm().expect("default family is GM");
    let backend = CountingDenoiser::new(AnalyticGmDenoiser::new(gm.clone())?);

    let draw = trial_channel(&cfg.channel_model, spec.master_seed, 0);
    for snr_db in [-10.0, 0.0] {
        let frame = trial_frame(&draw.h, snr_db, 2000, 0, &spec)?;
        println!("SNR {snr_db} dB, N_d 2000");
        for v in Variant::ALL {
            backend.reset();
            let est = estimate_gramdiff(&frame, &backend, &cfg.estimator_config(v), Some(&draw.h))?;
            let nmse = nmse_ch(&draw.h, &est.h_hat)?;
            println!(
                "  {:<9} NMSE {nmse:.4} ({:+.2} dB)  t*={:<3} denoiser calls {:<3} gram steps {}",
                v.tag(),
                to_db(nmse),
                est.t_star,
                backend.calls(),
                est.gram_evals
            );
        }
        let genie = estimate_genie_lmmse(&frame, gm, draw.component.unwrap())?;
        let nmse = nmse_ch(&draw.h, &genie)?;
        println!("  {:<9} NMSE {nmse:.4} ({:+.2} dB)", "genie", to_db(nmse));
    }
    Ok(())
}
