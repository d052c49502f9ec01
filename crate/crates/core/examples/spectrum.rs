//! Eigen-spectrum concentration of the two channel families.

use gramdiff::channel::{ChannelModel, LosChannelModel};
use gramdiff::harness::{default_gm, gram_spectrum_stats, Dims};

fn main() -> gramdiff::Result<()> {
    let dims = Dims::default();
    let families = [
        ("gm", default_gm(dims)),
        ("los", ChannelModel::Los(LosChannelModel::default_for(dims.n_r, dims.n_t))),
    ];
    for (name, model) in families {
        let s = gram_spectrum_stats(&model, 1000, 3)?;
        let head: Vec<String> = s.mean_spectrum.iter().take(6).map(|p| format!("{p:.3}")).collect();
        println!(
            "{name:<4} entropy {:.4} (var {:.5})  leading eigenvalue shares [{}]",
            s.mean_entropy,
            s.var_entropy,
            head.join(", ")
        );
    }
    Ok(())
}
