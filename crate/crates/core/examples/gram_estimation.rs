//! Blind Gram estimation from data symbols: error against the oracle Gram
//! versus block length, and the `1/N_d` scaling law.

use gramdiff::channel::GmChannelModel;
use gramdiff::gram::{gram_nmse, sample_gram};
use gramdiff::link::{make_data, make_pilots, sigma2_from_snr_db, transmit, Constellation, PilotKind};
use gramdiff::rng::stream;

fn main() -> gramdiff::Result<()> {
    let model = GmChannelModel::clustered(16, 4, 8, 1);
    let x_p = make_pilots(4, PilotKind::Dft)?;
    let trials = 200;
    for snr_db in [0.0, 10.0] {
        let s2 = sigma2_from_snr_db(snr_db);
        println!("SNR {snr_db} dB");
        for n_d in [20, 100, 1000, 10_000] {
            let mut total = 0.0;
            for i in 0..trials {
                let mut rng = stream(11, &[i]);
                let (h, _) = model.sample(&mut rng);
                let x_d = make_data(4, n_d, Constellation::Qpsk, &mut rng);
                let frame = transmit(&h, &x_p, &x_d, s2, s2, &mut rng)?;
                let est = sample_gram(&frame.y_d, frame.sigma2_d, 0.0)?;
                total += gram_nmse(&est.r_spatial, &h.gram())?;
            }
            let nmse = total / trials as f64;
            println!("  N_d={n_d:>6}  NMSE_R {nmse:.5}  N_d*NMSE_R {:.2}", nmse * n_d as f64);
        }
    }
    Ok(())
}
