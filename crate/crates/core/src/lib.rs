//! Gram-matrix guided diffusion posterior sampling for semi-blind MIMO
//! channel estimation.
//!
//! The pipeline: pilot observations are decorrelated and moved to the
//! angular domain, where they look like a channel plus white Gaussian noise.
//! A deterministic (DDIM) reverse diffusion started at the step whose SNR
//! matches the observation denoises them. Two guidance terms steer each
//! reverse step: a likelihood term pulling the Tweedie estimate toward the
//! observation, and a Gram term pulling `H̃ H̃^H` toward a Gram matrix
//! estimated blindly from the data symbols.
//!
//! Module map:
//!
//! - [`linalg`]: complex matrices, unitary DFTs, Hermitian eigendecomposition
//! - [`channel`]: synthetic channel families, normalization, dataset files
//! - [`link`]: pilots, data symbols, noisy transmission
//! - [`preproc`]: pilot decorrelation and the normalized angular observation
//! - [`gram`]: sample Gram estimation and PSD projection
//! - [`diffusion`]: noise schedule, denoiser backends, Tweedie and DDIM steps
//! - [`guidance`]: guidance directions, step-size schedules, gating, clipping
//! - [`estimators`]: the guided estimator, its ablations and Genie-LMMSE
//! - [`harness`]: configuration, Monte-Carlo sweeps, metrics and reports

pub mod channel;
pub mod diffusion;
mod error;
pub mod estimators;
pub mod gram;
pub mod guidance;
pub mod harness;
pub mod link;
pub mod linalg;
pub mod preproc;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{Complex64, ComplexMatrix};
