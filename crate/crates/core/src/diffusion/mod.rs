//! Variance-preserving diffusion machinery: schedule, SNR-matched start,
//! Tweedie estimate, deterministic DDIM update and denoiser backends.

mod backend;
pub mod neural;
mod sampler;
mod schedule;

pub use backend::{AnalyticGmDenoiser, CountingDenoiser, Denoiser, ZeroNoise};
pub use neural::NeuralDenoiser;
pub use sampler::{
    ddim_step, ddim_step_parts, forward_diffuse, match_t, tweedie, tweedie_from_noise, DdimStep,
    SnrMatch,
};
pub use schedule::{make_schedule, NoiseSchedule, ScheduleKind, ScheduleParams};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{GmChannelModel, GmComponent};
    use crate::rng::{complex_normal_matrix, stream};
    use crate::{Complex64, ComplexMatrix};

    fn scalar(v: f64) -> ComplexMatrix {
        ComplexMatrix::new(1, 1, vec![Complex64::new(v, 0.0)]).unwrap()
    }

    #[test]
    fn match_t_examples() {
        // ᾱ chosen so snr_dm = [100, 10, 1, 0.1]
        let abar = [100.0 / 101.0, 10.0 / 11.0, 0.5, 0.1 / 1.1];
        let mut prev = 1.0;
        let betas: Vec<f64> = abar
            .iter()
            .map(|a| {
                let b = 1.0 - a / prev;
                prev = *a;
                b
            })
            .collect();
        let s = NoiseSchedule::from_betas(betas).unwrap();
        assert_eq!(match_t(8.0, &s, SnrMatch::Raw), 2);
        assert_eq!(match_t(10.0, &s, SnrMatch::Raw), 2);
        assert_eq!(match_t(0.01, &s, SnrMatch::Raw), 4);
        assert_eq!(match_t(1e6, &s, SnrMatch::Raw), 1);
    }

    #[test]
    fn match_t_ties_go_to_smaller_step() {
        // snr_dm = [3, 1]; 2 is equidistant
        let s = NoiseSchedule::from_betas(vec![0.25, 1.0 - 0.5 / 0.75]).unwrap();
        assert!((s.snr_dm(1) - 3.0).abs() < 1e-12 && (s.snr_dm(2) - 1.0).abs() < 1e-12);
        assert_eq!(match_t(2.0, &s, SnrMatch::Raw), 1);
    }

    #[test]
    fn tweedie_single_unit_component() {
        let s = NoiseSchedule::from_betas(vec![0.75]).unwrap();
        let d = AnalyticGmDenoiser::new(GmChannelModel::single_gaussian(1, 1)).unwrap();
        let t = tweedie(&scalar(2.0), 1, &s, &d).unwrap();
        assert!((t[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tweedie_with_zero_noise_rescales() {
        let s = NoiseSchedule::from_betas(vec![0.36]).unwrap();
        let t = tweedie(&scalar(1.6), 1, &s, &ZeroNoise).unwrap();
        assert!((t[(0, 0)].re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tweedie_matches_two_component_posterior() {
        let model = GmChannelModel::new(
            2,
            2,
            vec![
                GmComponent {
                    weight: 0.3,
                    variances: vec![2.0, 0.5, 1.0, 0.1],
                },
                GmComponent {
                    weight: 0.7,
                    variances: vec![0.2, 1.5, 0.9, 1.3],
                },
            ],
        )
        .unwrap();
        let d = AnalyticGmDenoiser::new(model.clone()).unwrap();
        let s = make_schedule(50, 1e-3, 0.05, ScheduleKind::Linear).unwrap();
        let t = 20;
        let ab = s.alpha_bar(t);
        let x = complex_normal_matrix(&mut stream(12, &[]), 2, 2, 1.0);

        // oracle: plain densities, no log-domain tricks
        let dens: Vec<f64> = model
            .components
            .iter()
            .map(|c| {
                c.weight
                    * x.data()
                        .iter()
                        .zip(&c.variances)
                        .map(|(z, &v)| {
                            let var = ab * v + 1.0 - ab;
                            (-(z.norm_sqr()) / var).exp() / (std::f64::consts::PI * var)
                        })
                        .product::<f64>()
            })
            .collect();
        let total: f64 = dens.iter().sum();
        let expected = ComplexMatrix::from_fn(2, 2, |r, c| {
            let i = r * 2 + c;
            model
                .components
                .iter()
                .zip(&dens)
                .map(|(comp, p)| {
                    let v = comp.variances[i];
                    x[(r, c)] * (p / total * ab.sqrt() * v / (ab * v + 1.0 - ab))
                })
                .sum()
        });
        let got = tweedie(&x, t, &s, &d).unwrap();
        assert!(got.max_abs_diff(&expected) < 1e-8);
    }

    #[test]
    fn ddim_last_step_returns_tweedie() {
        let s = make_schedule(10, 1e-3, 0.1, ScheduleKind::Linear).unwrap();
        let d = AnalyticGmDenoiser::new(GmChannelModel::clustered(4, 2, 3, 1)).unwrap();
        let x = complex_normal_matrix(&mut stream(1, &[]), 4, 2, 1.0);
        let next = ddim_step(&x, 1, &s, &d).unwrap();
        assert_eq!(next, tweedie(&x, 1, &s, &d).unwrap());
    }

    #[test]
    fn ddim_with_zero_noise_is_a_rescale() {
        let s = make_schedule(10, 1e-3, 0.1, ScheduleKind::Linear).unwrap();
        let x = complex_normal_matrix(&mut stream(2, &[]), 3, 2, 1.0);
        let t = 6;
        let next = ddim_step(&x, t, &s, &ZeroNoise).unwrap();
        let expected = x.scale((s.alpha_bar(t - 1) / s.alpha_bar(t)).sqrt());
        assert!(next.max_abs_diff(&expected) < 1e-14);
    }

    /// For a unit Gaussian prior the DDIM map is a rotation in the
    /// (signal, noise) plane: with `cos θ_t = √ᾱ_t`, one step multiplies the
    /// state by `cos(θ_t − θ_{t−1})`.
    #[test]
    fn ddim_single_gaussian_is_angle_rotation() {
        let s = make_schedule(300, 1e-4, 0.02, ScheduleKind::Linear).unwrap();
        let d = AnalyticGmDenoiser::new(GmChannelModel::single_gaussian(3, 2)).unwrap();
        let mut rng = stream(3, &[]);
        for t in [1usize, 2, 50, 151, 300] {
            let x = complex_normal_matrix(&mut rng, 3, 2, 1.0);
            let next = ddim_step(&x, t, &s, &d).unwrap();
            let th = s.alpha_bar(t).sqrt().acos();
            let th_prev = s.alpha_bar(t - 1).sqrt().acos();
            let expected = x.scale((th - th_prev).cos());
            assert!(next.max_abs_diff(&expected) < 1e-12, "t={t}");
        }
    }

    #[test]
    fn noise_tweedie_duality() {
        let s = make_schedule(100, 1e-4, 0.02, ScheduleKind::Linear).unwrap();
        let d = AnalyticGmDenoiser::new(GmChannelModel::clustered(4, 2, 4, 5)).unwrap();
        let x = complex_normal_matrix(&mut stream(4, &[]), 4, 2, 1.0);
        let t = 40;
        let eps = d.predict_noise(&x, t, &s).unwrap();
        let tw = tweedie(&x, t, &s, &d).unwrap();
        let ab = s.alpha_bar(t);
        let mut rebuilt = x.clone();
        rebuilt.axpy(-ab.sqrt(), &tw);
        rebuilt.scale_mut(1.0 / (1.0 - ab).sqrt());
        assert!(rebuilt.max_abs_diff(&eps) < 1e-10);
    }

    #[test]
    fn forward_diffuse_at_clean_end_and_determinism() {
        let s = make_schedule(10, 1e-3, 0.1, ScheduleKind::Linear).unwrap();
        let h = complex_normal_matrix(&mut stream(5, &[]), 2, 2, 1.0);
        assert_eq!(forward_diffuse(&h, 0, &s, &mut stream(6, &[])), h);
        assert_eq!(
            forward_diffuse(&h, 5, &s, &mut stream(6, &[])),
            forward_diffuse(&h, 5, &s, &mut stream(6, &[]))
        );
    }

    #[test]
    fn forward_diffuse_preserves_variance() {
        let s = make_schedule(300, 1e-4, 0.02, ScheduleKind::Linear).unwrap();
        let mut rng = stream(7, &[]);
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let h0 = complex_normal_matrix(&mut rng, 1, 1, 1.0);
            acc += forward_diffuse(&h0, 150, &s, &mut rng)[(0, 0)].norm_sqr();
        }
        let v = acc / n as f64;
        assert!((v - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn counting_wrapper_counts() {
        let s = make_schedule(10, 1e-3, 0.1, ScheduleKind::Linear).unwrap();
        let c = CountingDenoiser::new(ZeroNoise);
        let x = scalar(1.0);
        for t in (1..=4).rev() {
            ddim_step(&x, t, &s, &c).unwrap();
        }
        assert_eq!(c.calls(), 4);
    }
}
