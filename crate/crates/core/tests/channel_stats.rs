use gramdiff::channel::{ChannelModel, GmChannelModel, LosChannelModel};
use gramdiff::harness::{default_gm, gram_spectrum_stats, Dims};
use gramdiff::linalg::dft2;
use gramdiff::rng::stream;

fn mean_entry_power(model: &ChannelModel, n: usize) -> f64 {
    let (n_r, n_t) = model.dims();
    let total: f64 = (0..n)
        .map(|i| model.sample(&mut stream(7, &[i as u64])).h.fro_norm_sq())
        .sum();
    total / (n * n_r * n_t) as f64
}

#[test]
fn both_families_have_unit_average_power() {
    let gm = default_gm(Dims::default());
    let los = ChannelModel::Los(LosChannelModel::default_for(16, 4));
    for model in [gm, los] {
        let p = mean_entry_power(&model, 4000);
        assert!((p - 1.0).abs() < 0.05, "{p}");
    }
}

#[test]
fn gm_angular_variances_match_the_mixture() {
    let ChannelModel::Gm(gm) = default_gm(Dims::default()) else { unreachable!() };
    let n = 20_000;
    let mut acc = vec![0.0; gm.n_r * gm.n_t];
    for i in 0..n {
        let (h, _) = gm.sample(&mut stream(8, &[i]));
        for (a, z) in acc.iter_mut().zip(dft2(&h).data()) {
            *a += z.norm_sqr() / n as f64;
        }
    }
    for (got, want) in acc.iter().zip(gm.mean_variances()) {
        assert!((got - want).abs() < 0.1 * want.max(0.05), "{got} vs {want}");
    }
}

#[test]
fn single_gaussian_is_white() {
    let gm = GmChannelModel::single_gaussian(4, 2);
    let n = 20_000;
    let mut cross = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..n {
        let (h, _) = gm.sample(&mut stream(9, &[i]));
        cross += h[(0, 0)] * h[(1, 1)].conj();
    }
    assert!((cross / n as f64).norm() < 0.03);
}

#[test]
fn gm_spectrum_is_flatter_than_los() {
    let gm = gram_spectrum_stats(&default_gm(Dims::default()), 300, 3).unwrap();
    let los = gram_spectrum_stats(&ChannelModel::Los(LosChannelModel::default_for(16, 4)), 300, 3).unwrap();
    assert!(gm.mean_entropy > los.mean_entropy);
    assert!(los.mean_spectrum[0] > gm.mean_spectrum[0]);
    let s: f64 = gm.mean_spectrum.iter().sum();
    assert!((s - 1.0).abs() < 1e-9);
}
