//! Synthetic channel priors, angular-domain normalization and dataset files.
//!
//! Two families stand in for measured channel data: a Gaussian mixture with
//! diagonal angular covariances (distributed eigen-spectrum, exact posterior
//! means available) and a clustered line-of-sight model (concentrated
//! eigen-spectrum).

pub(crate) mod dataset;
mod gm;
mod los;
mod normalizer;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use dataset::{generate_dataset, read_dataset, write_dataset, DatasetManifest, DATASET_MAGIC};
pub use gm::{GmChannelModel, GmComponent};
pub use los::LosChannelModel;
pub use normalizer::Normalizer;

use crate::{ComplexMatrix, Result};

/// A channel family, selectable from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ChannelModel {
    Gm(GmChannelModel),
    Los(LosChannelModel),
}

/// A spatial channel realization. `component` is the generating mixture
/// component for the GM family (what the Genie-LMMSE baseline is told).
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    pub h: ComplexMatrix,
    pub component: Option<usize>,
}

impl ChannelModel {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            ChannelModel::Gm(m) => (m.n_r, m.n_t),
            ChannelModel::Los(m) => (m.n_r, m.n_t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Gm(m) => m.validate(),
            ChannelModel::Los(m) => m.validate(),
        }
    }

    pub fn as_gm(&self) -> Option<&GmChannelModel> {
        match self {
            ChannelModel::Gm(m) => Some(m),
            ChannelModel::Los(_) => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        match self {
            ChannelModel::Gm(m) => {
                let (h, k) = m.sample(rng);
                ChannelDraw {
                    h,
                    component: Some(k),
                }
            }
            ChannelModel::Los(m) => ChannelDraw {
                h: m.sample(rng),
                component: None,
            },
        }
    }
}

/// Draws one spatial channel matrix.
pub fn sample_channel<R: Rng + ?Sized>(model: &ChannelModel, rng: &mut R) -> ComplexMatrix {
    model.sample(rng).h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn same_seed_same_matrix() {
        let model = ChannelModel::Gm(GmChannelModel::clustered(16, 4, 8, 1));
        let a = sample_channel(&model, &mut stream(5, &[1]));
        let b = sample_channel(&model, &mut stream(5, &[1]));
        assert_eq!(a, b);
        let los = ChannelModel::Los(LosChannelModel::new(16, 4, 2, 0.3, 0.5).unwrap());
        assert_eq!(
            sample_channel(&los, &mut stream(5, &[1])),
            sample_channel(&los, &mut stream(5, &[1]))
        );
    }

    #[test]
    fn model_serializes_with_family_tag() {
        let los = ChannelModel::Los(LosChannelModel::new(4, 2, 1, 1.0, 0.0).unwrap());
        let s = serde_json::to_string(&los).unwrap();
        assert!(s.contains("\"family\":\"los\""));
        let back: ChannelModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, los);
    }
}
