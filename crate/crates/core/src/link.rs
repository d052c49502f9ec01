//! Frame synthesis: orthonormal pilots, i.i.d. data symbols and the
//! observation model `Y = H X + Z` split into pilot and data portions.

use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::dft_matrix;
use crate::rng::complex_normal_matrix;
use crate::{ComplexMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotKind {
    /// Unitary DFT pilots.
    #[default]
    Dft,
    Identity,
}

/// Unit-energy symbol alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Qpsk,
    Qam16,
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Constellation::Qpsk),
            "qam16" | "16qam" | "16-qam" => Ok(Constellation::Qam16),
            other => Err(Error::Config(format!("unknown constellation {other:?}"))),
        }
    }
}

impl Constellation {
    pub fn points(self) -> Vec<Complex64> {
        match self {
            Constellation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    Complex64::new(s, s),
                    Complex64::new(-s, s),
                    Complex64::new(-s, -s),
                    Complex64::new(s, -s),
                ]
            }
            Constellation::Qam16 => {
                // levels ±1, ±3 scaled by 1/√10 for unit average energy
                let s = 1.0 / 10f64.sqrt();
                let levels = [-3.0, -1.0, 1.0, 3.0];
                levels
                    .iter()
                    .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re * s, im * s)))
                    .collect()
            }
        }
    }
}

/// One coherence interval: pilots, data and their noisy observations.
#[derive(Debug, Clone)]
pub struct Frame {
    pub x_p: ComplexMatrix,
    pub x_d: ComplexMatrix,
    pub y_p: ComplexMatrix,
    pub y_d: ComplexMatrix,
    /// Complex noise variance on the pilot portion.
    pub sigma2: f64,
    /// Complex noise variance on the data portion.
    pub sigma2_d: f64,
    pub n_d: usize,
}

/// `n_t × n_t` pilot matrix with `X_p X_p^H = I`.
pub fn make_pilots(n_t: usize, kind: PilotKind) -> Result<ComplexMatrix> {
    match kind {
        PilotKind::Dft => dft_matrix(n_t),
        PilotKind::Identity if n_t > 0 => Ok(ComplexMatrix::identity(n_t)),
        PilotKind::Identity => Err(Error::dim("pilot size must be at least 1")),
    }
}

/// `n_t × n_d` matrix of i.i.d. uniformly drawn constellation symbols.
pub fn make_data<R: Rng + ?Sized>(
    n_t: usize,
    n_d: usize,
    constellation: Constellation,
    rng: &mut R,
) -> ComplexMatrix {
    let points = constellation.points();
    ComplexMatrix::from_fn(n_t, n_d, |_, _| points[rng.gen_range(0..points.len())])
}

/// Passes pilots and data through `H` with CN(0, σ²) noise (`sigma2_d` on
/// the data portion). Pilot noise is drawn before data noise.
pub fn transmit<R: Rng + ?Sized>(
    h: &ComplexMatrix,
    x_p: &ComplexMatrix,
    x_d: &ComplexMatrix,
    sigma2: f64,
    sigma2_d: f64,
    rng: &mut R,
) -> Result<Frame> {
    if !(sigma2 >= 0.0 && sigma2_d >= 0.0) {
        return Err(Error::Config("noise variances must be non-negative".into()));
    }
    if x_d.rows() != x_p.rows() {
        return Err(Error::dim(format!(
            "pilots have {} rows, data {}",
            x_p.rows(),
            x_d.rows()
        )));
    }
    let mut y_p = h.matmul(x_p)?;
    let mut y_d = h.matmul(x_d)?;
    if sigma2 > 0.0 {
        y_p += &complex_normal_matrix(rng, y_p.rows(), y_p.cols(), sigma2);
    }
    if sigma2_d > 0.0 {
        y_d += &complex_normal_matrix(rng, y_d.rows(), y_d.cols(), sigma2_d);
    }
    Ok(Frame {
        x_p: x_p.clone(),
        x_d: x_d.clone(),
        y_p,
        y_d,
        sigma2,
        sigma2_d,
        n_d: x_d.cols(),
    })
}

/// `σ² = 10^(−SNR/10)` under unit signal variance.
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn one_antenna_pilot() {
        assert_eq!(make_pilots(1, PilotKind::Dft).unwrap(), ComplexMatrix::identity(1));
    }

    #[test]
    fn pilots_are_orthonormal() {
        let x = make_pilots(4, PilotKind::Dft).unwrap();
        let p = x.matmul(&x.adjoint()).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        assert_eq!(make_pilots(3, PilotKind::Identity).unwrap(), ComplexMatrix::identity(3));
    }

    #[test]
    fn qpsk_symbols_lie_on_the_alphabet() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = make_data(4, 100, Constellation::Qpsk, &mut stream(1, &[]));
        for z in x.data() {
            assert!((z.re.abs() - s).abs() < 1e-15 && (z.im.abs() - s).abs() < 1e-15);
        }
    }

    #[test]
    fn constellations_have_unit_energy() {
        for c in [Constellation::Qpsk, Constellation::Qam16] {
            let p = c.points();
            let e: f64 = p.iter().map(|z| z.norm_sqr()).sum::<f64>() / p.len() as f64;
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_constellation_is_config_error() {
        assert!(matches!("8psk".parse::<Constellation>(), Err(Error::Config(_))));
        assert_eq!("QPSK".parse::<Constellation>().unwrap(), Constellation::Qpsk);
    }

    #[test]
    fn empty_data_block() {
        let x = make_data(4, 0, Constellation::Qpsk, &mut stream(1, &[]));
        assert_eq!(x.shape(), (4, 0));
    }

    #[test]
    fn noiseless_transmission_is_exact() {
        let mut rng = stream(2, &[]);
        let h = complex_normal_matrix(&mut rng, 3, 2, 1.0);
        let xp = make_pilots(2, PilotKind::Dft).unwrap();
        let xd = make_data(2, 5, Constellation::Qpsk, &mut rng);
        let f = transmit(&h, &xp, &xd, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(f.y_p, h.matmul(&xp).unwrap());
        assert_eq!(f.n_d, 5);
    }

    #[test]
    fn transmit_rejects_mismatched_dims() {
        let mut rng = stream(2, &[]);
        let h = ComplexMatrix::zeros(3, 2);
        let xp = make_pilots(3, PilotKind::Dft).unwrap();
        let xd = ComplexMatrix::zeros(3, 1);
        assert!(transmit(&h, &xp, &xd, 0.1, 0.1, &mut rng).is_err());
    }

    #[test]
    fn transmit_is_deterministic_per_seed() {
        let h = ComplexMatrix::identity(2);
        let xp = make_pilots(2, PilotKind::Dft).unwrap();
        let xd = make_data(2, 3, Constellation::Qpsk, &mut stream(0, &[]));
        let a = transmit(&h, &xp, &xd, 0.3, 0.3, &mut stream(4, &[])).unwrap();
        let b = transmit(&h, &xp, &xd, 0.3, 0.3, &mut stream(4, &[])).unwrap();
        assert_eq!(a.y_p, b.y_p);
        assert_eq!(a.y_d, b.y_d);
    }
}
