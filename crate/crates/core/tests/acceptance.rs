//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Runs on the analytic backend only.

use std::time::Instant;

use gramdiff::channel::{ChannelModel, GmChannelModel, LosChannelModel};
use gramdiff::diffusion::{make_schedule, tweedie, AnalyticGmDenoiser, ScheduleKind};
use gramdiff::estimators::{estimate_gramdiff, BackendSpec, EstimatorConfig, GramSource, Variant};
use gramdiff::gram::{gram_nmse, sample_gram};
use gramdiff::guidance::{gram_guidance, gram_objective};
use gramdiff::harness::{
    gram_spectrum_stats, run_sweep, to_db, trial_channel, trial_frame, Config, SweepResult, SweepSpec,
    GENIE_TAG,
};
use gramdiff::linalg::{dft2, idft2};
use gramdiff::link::{make_data, make_pilots, sigma2_from_snr_db, transmit, Constellation, PilotKind};
use gramdiff::rng::{complex_normal_matrix, stream};
use gramdiff::{Complex64, ComplexMatrix};
use rand::Rng;

const SEED: u64 = 2024;
const SNRS: [f64; 5] = [-15.0, -10.0, -5.0, 0.0, 5.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn parseval() -> Outcome {
    let mut rng = stream(SEED, &[100]);
    let mut worst_norm = 0.0f64;
    let mut worst_trip = 0.0f64;
    for i in 0..100 {
        let rows = rng.gen_range(1..=64);
        let cols = rng.gen_range(1..=16);
        let h = complex_normal_matrix(&mut stream(SEED, &[101, i]), rows, cols, 1.0);
        let a = dft2(&h);
        let n = h.fro_norm();
        worst_norm = worst_norm.max((a.fro_norm() - n).abs() / n);
        worst_trip = worst_trip.max(idft2(&a).max_abs_diff(&h));
    }
    outcome(
        worst_norm <= 1e-10 && worst_trip <= 1e-10,
        format!("max rel norm defect {worst_norm:.2e}, max round-trip error {worst_trip:.2e}"),
    )
}

fn central_difference(x: &ComplexMatrix, r: &ComplexMatrix, h: f64) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let mut d = [0.0; 2];
            for (k, unit) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].into_iter().enumerate() {
                let mut p = x.clone();
                p[(i, j)] += unit;
                let mut m = x.clone();
                m[(i, j)] -= unit;
                d[k] = (gram_objective(&p, r) - gram_objective(&m, r)) / (2.0 * h);
            }
            g[(i, j)] = Complex64::new(d[0], d[1]);
        }
    }
    g
}

fn gram_gradient() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut rng = stream(SEED, &[200, i]);
        let x = complex_normal_matrix(&mut rng, 4, 3, 1.0);
        let r = complex_normal_matrix(&mut rng, 4, 4, 1.0).gram();
        let analytic = gram_guidance(&x, &r).unwrap();
        let numeric = central_difference(&x, &r, 1e-5);
        worst = worst.max((&analytic - &numeric).fro_norm() / analytic.fro_norm());
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e}"))
}

fn tweedie_lmmse() -> Outcome {
    let (n_r, n_t) = (16, 4);
    let gm = GmChannelModel::single_gaussian(n_r, n_t);
    let backend = AnalyticGmDenoiser::new(gm.clone()).unwrap();
    let schedule = make_schedule(300, 1e-4, 0.02, ScheduleKind::Linear).unwrap();

    // exact posterior mean at the matched noise level
    let mut worst_tw = 0.0f64;
    for t in [1, 10, 50, 150, 300] {
        let ab = schedule.alpha_bar(t);
        let sigma2 = (1.0 - ab) / ab;
        let y = complex_normal_matrix(&mut stream(SEED, &[300, t as u64]), n_r, n_t, 1.0 + sigma2);
        let x = y.scale(ab.sqrt());
        let est = tweedie(&x, t, &schedule, &backend).unwrap();
        worst_tw = worst_tw.max(est.max_abs_diff(&y.scale(1.0 / (1.0 + sigma2))));
    }

    let cfg = EstimatorConfig::for_variant(Variant::Dm);
    let model = ChannelModel::Gm(gm);
    let spec = SweepSpec {
        snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0],
        n_d_grid: vec![1],
        n_trials: 500,
        variants: vec![cfg],
        genie: true,
        pilots: PilotKind::Dft,
        constellation: Constellation::Qpsk,
        master_seed: SEED,
        output: None,
        raw_output: None,
        threads: None,
    };
    let res = run_sweep(&spec, &model, &backend).unwrap();
    let mut worst_gap = 0.0f64;
    let mut gaps = Vec::new();
    for &s in &spec.snr_grid_db {
        let dm = res.cell("dm", s, 1).unwrap().nmse_mean;
        let genie = res.cell(GENIE_TAG, s, 1).unwrap().nmse_mean;
        let gap = to_db(dm) - to_db(genie);
        worst_gap = worst_gap.max(gap.abs());
        gaps.push(format!("{s}:{gap:+.3}"));
    }
    outcome(
        worst_tw <= 1e-9 && worst_gap <= 0.2,
        format!(
            "Tweedie max error {worst_tw:.2e}; DM - Genie gap [dB] {}",
            gaps.join(" ")
        ),
    )
}

fn nesting() -> Outcome {
    let cfg = Config::default();
    let model = &cfg.channel_model;
    let backend = BackendSpec::AnalyticGm.load(model, &cfg.schedule).unwrap();
    let spec = cfg.to_sweep_spec();
    let full = cfg.estimator_config(Variant::GramDiff);
    let no_gram = EstimatorConfig {
        guidance: gramdiff::guidance::GuidanceConfig {
            lambda_gram: 0.0,
            ..full.guidance.clone()
        },
        ..full.clone()
    };
    let none = EstimatorConfig {
        guidance: gramdiff::guidance::GuidanceConfig {
            lambda_like: 0.0,
            ..no_gram.guidance.clone()
        },
        ..no_gram.clone()
    };
    let lik = cfg.estimator_config(Variant::DmLik);
    let dm = cfg.estimator_config(Variant::Dm);
    let mut mismatches = 0;
    for trial in 0..50 {
        let snr = SNRS[trial % SNRS.len()];
        let h = trial_channel(model, SEED, trial).h;
        let frame = trial_frame(&h, snr, 2000, trial, &spec).unwrap();
        let a = estimate_gramdiff(&frame, &backend, &no_gram, Some(&h)).unwrap().h_hat;
        let b = estimate_gramdiff(&frame, &backend, &lik, Some(&h)).unwrap().h_hat;
        let c = estimate_gramdiff(&frame, &backend, &none, Some(&h)).unwrap().h_hat;
        let d = estimate_gramdiff(&frame, &backend, &dm, Some(&h)).unwrap().h_hat;
        let same = |x: &ComplexMatrix, y: &ComplexMatrix| {
            x.data()
                .iter()
                .zip(y.data())
                .all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits())
        };
        mismatches += usize::from(!same(&a, &b)) + usize::from(!same(&c, &d));
    }
    outcome(mismatches == 0, format!("{mismatches} bitwise mismatches over 50 trials"))
}

fn gram_scaling() -> Outcome {
    let cfg = Config::default();
    let model = &cfg.channel_model;
    let sigma2 = sigma2_from_snr_db(10.0);
    let x_p = make_pilots(cfg.dims.n_t, PilotKind::Dft).unwrap();
    let mean_nmse = |n_d: usize| {
        let mut acc = 0.0;
        for trial in 0..500 {
            let h = model.sample(&mut stream(SEED, &[500, trial])).h;
            let mut rng = stream(SEED, &[501, n_d as u64, trial]);
            let x_d = make_data(cfg.dims.n_t, n_d, Constellation::Qpsk, &mut rng);
            let frame = transmit(&h, &x_p, &x_d, sigma2, sigma2, &mut rng).unwrap();
            let r = sample_gram(&frame.y_d, sigma2, 0.0).unwrap();
            acc += gram_nmse(&r.r_spatial, &h.gram()).unwrap();
        }
        acc / 500.0
    };
    let short = mean_nmse(100);
    let long = mean_nmse(10_000);
    let ratio = short / long;
    outcome(
        (30.0..=300.0).contains(&ratio),
        format!("NMSE_R {short:.4e} at N_d=100, {long:.4e} at N_d=10^4, ratio {ratio:.1}"),
    )
}

fn directional(default_sweep: &SweepResult) -> Outcome {
    let mut all_better = true;
    let mut margin_m5 = f64::NAN;
    let mut parts = Vec::new();
    for &s in &SNRS {
        let dm = default_sweep.cell("dm", s, 2000).unwrap().nmse_mean;
        let gd = default_sweep.cell("gramdiff", s, 2000).unwrap().nmse_mean;
        all_better &= gd < dm;
        let margin = (dm - gd) / dm;
        if s == -5.0 {
            margin_m5 = margin;
        }
        parts.push(format!("{s}:{:.1}%", 100.0 * margin));
    }
    outcome(
        all_better && margin_m5 >= 0.10,
        format!("relative gain over dm {}", parts.join(" ")),
    )
}

fn robustness(default_sweep: &SweepResult, short_sweep: &SweepResult) -> Outcome {
    let mut worst = 0.0f64;
    let mut at = (0.0, 0);
    for n_d in [5, 20, 200, 2000] {
        let res = if n_d == 2000 { default_sweep } else { short_sweep };
        for &s in &SNRS {
            let gd = res.cell("gramdiff", s, n_d).unwrap().nmse_mean;
            let lik = res.cell("dm+lik", s, n_d).unwrap().nmse_mean;
            if gd / lik > worst {
                worst = gd / lik;
                at = (s, n_d);
            }
        }
    }
    outcome(
        worst <= 1.03,
        format!("worst gramdiff/dm+lik ratio {worst:.4} at {} dB, N_d={}", at.0, at.1),
    )
}

fn stability(default_sweep: &SweepResult) -> Outcome {
    let d = default_sweep.divergences();
    outcome(
        d == 0,
        format!("{d} divergences over {} runs", default_sweep.records.len()),
    )
}

fn determinism() -> Outcome {
    let mut cfg = Config::default();
    cfg.sweep.n_trials = 20;
    cfg.sweep.n_d_grid = vec![20, 2000];
    let backend = BackendSpec::AnalyticGm.load(&cfg.channel_model, &cfg.schedule).unwrap();
    let csv = |threads: usize| {
        let spec = SweepSpec {
            threads: Some(threads),
            ..cfg.to_sweep_spec()
        };
        run_sweep(&spec, &cfg.channel_model, &backend).unwrap().to_csv()
    };
    let one = csv(1);
    let identical = [1, 2, 7].into_iter().all(|n| csv(n) == one);
    outcome(identical, format!("{} bytes, threads 1/1/2/7", one.len()))
}

fn spectral() -> Outcome {
    let gm = Config::default().channel_model;
    let los = ChannelModel::Los(LosChannelModel::default_for(16, 4));
    let g = gram_spectrum_stats(&gm, 1000, SEED).unwrap().mean_entropy;
    let l = gram_spectrum_stats(&los, 1000, SEED).unwrap().mean_entropy;
    outcome(
        g - l >= 0.1,
        format!("mean entropy GM {g:.4}, LOS {l:.4}, gap {:.4}", g - l),
    )
}

fn main() {
    // `cargo test` passes harness flags; a name filter skips the suite
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if filters.iter().any(|f| !"acceptance".contains(f.as_str())) {
        return;
    }

    let cfg = Config::default();
    let backend = BackendSpec::AnalyticGm.load(&cfg.channel_model, &cfg.schedule).unwrap();
    let start = Instant::now();
    let default_sweep = run_sweep(&cfg.to_sweep_spec(), &cfg.channel_model, &backend).unwrap();
    let mut short = cfg.clone();
    short.sweep.n_d_grid = vec![5, 20, 200];
    short.sweep.variants = vec![Variant::DmLik, Variant::GramDiff];
    short.sweep.genie = false;
    let short_sweep = run_sweep(&short.to_sweep_spec(), &cfg.channel_model, &backend).unwrap();
    println!("shared sweeps took {:.1}s", start.elapsed().as_secs_f64());
    assert_eq!(cfg.estimator_config(Variant::GramDiff).gram_source, GramSource::Estimated);

    type Check<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("unitarity-parseval", Box::new(parseval)),
        ("gram-gradient-fd", Box::new(gram_gradient)),
        ("tweedie-lmmse", Box::new(tweedie_lmmse)),
        ("vanishing-guidance-nesting", Box::new(nesting)),
        ("gram-scaling-law", Box::new(gram_scaling)),
        ("directional-gain", Box::new(|| directional(&default_sweep))),
        ("coherence-robustness", Box::new(|| robustness(&default_sweep, &short_sweep))),
        ("stability", Box::new(|| stability(&default_sweep))),
        ("determinism", Box::new(determinism)),
        ("spectral-structure", Box::new(spectral)),
    ];

    let mut failures = 0;
    for (name, check) in &checks {
        let start = Instant::now();
        let o = check();
        failures += usize::from(!o.pass);
        println!(
            "{} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", checks.len() - failures, checks.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
