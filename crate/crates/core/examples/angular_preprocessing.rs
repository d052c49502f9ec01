//! Pilot decorrelation: with unitary pilots the angular observation is the
//! angular channel plus white noise of variance σ², and after normalization
//! it has the variance of a diffusion state at the matched step.

use gramdiff::channel::GmChannelModel;
use gramdiff::diffusion::{match_t, ScheduleParams, SnrMatch};
use gramdiff::linalg::dft2;
use gramdiff::link::{make_data, make_pilots, sigma2_from_snr_db, transmit, Constellation, PilotKind};
use gramdiff::preproc::to_angular_observation;
use gramdiff::rng::stream;

fn main() -> gramdiff::Result<()> {
    let model = GmChannelModel::clustered(16, 4, 8, 1);
    let schedule = ScheduleParams::default().build()?;
    let x_p = make_pilots(4, PilotKind::Dft)?;

    println!("{:>7} {:>10} {:>12} {:>12} {:>6} {:>10}", "SNR dB", "sigma2", "noise var", "state var", "t*", "alpha_bar");
    for snr_db in [-15.0, -10.0, -5.0, 0.0, 5.0] {
        let s2 = sigma2_from_snr_db(snr_db);
        let (mut noise, mut state) = (0.0, 0.0);
        let trials = 2000;
        let mut t_star = 0;
        for i in 0..trials {
            let mut rng = stream(7, &[i]);
            let (h, _) = model.sample(&mut rng);
            let x_d = make_data(4, 1, Constellation::Qpsk, &mut rng);
            let frame = transmit(&h, &x_p, &x_d, s2, s2, &mut rng)?;
            let obs = to_angular_observation(&frame.y_p, &frame.x_p, s2)?;
            noise += (&obs.y_angular - &dft2(&h)).fro_norm_sq() / 64.0;
            state += obs.y_tilde.fro_norm_sq() / 64.0;
            t_star = match_t(obs.snr, &schedule, SnrMatch::Raw);
        }
        let n = trials as f64;
        println!(
            "{snr_db:>7} {s2:>10.4} {:>12.4} {:>12.4} {t_star:>6} {:>10.4}",
            noise / n,
            state / n,
            schedule.alpha_bar(t_star)
        );
    }
    Ok(())
}
