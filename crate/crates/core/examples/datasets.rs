//! Channel datasets: generation with a reproducible manifest, reading back,
//! and fitting the angular normalizer.

use gramdiff::channel::{generate_dataset, read_dataset, Normalizer};
use gramdiff::harness::{default_gm, Dims};
use gramdiff::linalg::dft2;

fn main() -> gramdiff::Result<()> {
    let dir = std::env::temp_dir().join("gramdiff-dataset-example");
    std::fs::create_dir_all(&dir).map_err(|e| gramdiff::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("gm.gdch");

    let model = default_gm(Dims::default());
    let manifest = generate_dataset(&model, 2000, 42, &path)?;
    println!("wrote {} channels of {}x{} (seed {})", manifest.count, manifest.n_r, manifest.n_t, manifest.seed);

    let angular: Vec<_> = read_dataset(&path)?.iter().map(dft2).collect();
    let norm = Normalizer::fit(&angular)?;
    let (lo, hi) = norm
        .scale
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    println!("per-entry scales in [{lo:.3}, {hi:.3}] (the mixture is normalized, so near 1)");
    Ok(())
}
