//! Pilot decorrelation and the normalized additive-noise angular model.
//!
//! With orthonormal pilots, `Y_p X_p^H = H + Z_p X_p^H`. Moving that to the
//! angular domain gives `Ỹ = H̃ + Z̃` with `Z̃ ~ CN(0, σ²I)`, and dividing by
//! `√(1+σ²)` brings it to unit variance so it can stand in for a diffusion
//! state at the matching noise level.

use crate::linalg::dft2;
use crate::{ComplexMatrix, Error, Result};

const UNITARY_TOL: f64 = 1e-8;

/// Angular observation of one frame.
#[derive(Debug, Clone)]
pub struct AngularObservation {
    /// `Ỹ`, the decorrelated angular observation (unnormalized).
    pub y_angular: ComplexMatrix,
    /// `Ỹ / √(1+σ²)`.
    pub y_tilde: ComplexMatrix,
    pub sigma2: f64,
    /// `1/σ²` (infinite when noiseless).
    pub snr: f64,
    /// `1/√(1+σ²)`.
    pub scale: f64,
}

/// `Y_p X_p^H` for orthonormal pilots.
pub fn decorrelate(y_p: &ComplexMatrix, x_p: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x_p.is_square() {
        return Err(Error::Precondition(
            "pilot matrix must be square and unitary; general pseudo-inverse pilots are not supported"
                .into(),
        ));
    }
    let gram = x_p.matmul(&x_p.adjoint())?;
    let defect = gram.max_abs_diff(&ComplexMatrix::identity(x_p.rows()));
    if defect > UNITARY_TOL {
        return Err(Error::Precondition(format!(
            "pilot matrix is not unitary (max |X X^H - I| = {defect:.3e})"
        )));
    }
    y_p.matmul(&x_p.adjoint())
}

pub fn to_angular_observation(
    y_p: &ComplexMatrix,
    x_p: &ComplexMatrix,
    sigma2: f64,
) -> Result<AngularObservation> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::Precondition(format!("invalid noise variance {sigma2}")));
    }
    let y_angular = dft2(&decorrelate(y_p, x_p)?);
    let scale = 1.0 / (1.0 + sigma2).sqrt();
    Ok(AngularObservation {
        y_tilde: y_angular.scale(scale),
        y_angular,
        sigma2,
        snr: 1.0 / sigma2,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{make_pilots, PilotKind};
    use crate::rng::{complex_normal_matrix, stream};

    #[test]
    fn noiseless_decorrelation_recovers_channel() {
        let mut rng = stream(1, &[]);
        let h = complex_normal_matrix(&mut rng, 4, 3, 1.0);
        let xp = make_pilots(3, PilotKind::Dft).unwrap();
        let y = h.matmul(&xp).unwrap();
        assert!(decorrelate(&y, &xp).unwrap().max_abs_diff(&h) < 1e-12);
    }

    #[test]
    fn identity_pilots_pass_through() {
        let mut rng = stream(2, &[]);
        let y = complex_normal_matrix(&mut rng, 4, 3, 1.0);
        assert_eq!(decorrelate(&y, &ComplexMatrix::identity(3)).unwrap(), y);
    }

    #[test]
    fn non_unitary_pilots_are_rejected() {
        let xp = ComplexMatrix::identity(2).scale(2.0);
        let y = ComplexMatrix::zeros(3, 2);
        assert!(matches!(decorrelate(&y, &xp), Err(Error::Precondition(_))));
        assert!(matches!(
            decorrelate(&ComplexMatrix::zeros(3, 3), &ComplexMatrix::zeros(2, 3)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn noiseless_observation_is_the_angular_channel() {
        let mut rng = stream(3, &[]);
        let h = complex_normal_matrix(&mut rng, 4, 2, 1.0);
        let xp = make_pilots(2, PilotKind::Dft).unwrap();
        let obs = to_angular_observation(&h.matmul(&xp).unwrap(), &xp, 0.0).unwrap();
        assert!(obs.y_tilde.max_abs_diff(&dft2(&h)) < 1e-12);
        assert!(obs.snr.is_infinite());
    }

    #[test]
    fn unit_noise_scale() {
        let xp = make_pilots(2, PilotKind::Dft).unwrap();
        let obs = to_angular_observation(&ComplexMatrix::zeros(2, 2), &xp, 1.0).unwrap();
        assert!((obs.scale - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(obs.snr, 1.0);
    }

    #[test]
    fn snr_is_reciprocal_noise() {
        let xp = make_pilots(2, PilotKind::Dft).unwrap();
        let obs = to_angular_observation(&ComplexMatrix::zeros(2, 2), &xp, 0.37).unwrap();
        assert_eq!(obs.snr, 1.0 / 0.37);
    }
}
