//! Per-class covariate shift between a training and a test set: fit a
//! Gaussian mixture to each class in each split and report the
//! Jensen-Shannon divergence between the two fits.

mod divergence;
mod gmm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use divergence::{js_divergence, js_divergence_seeded, JsEstimate};
pub use gmm::{
    fit_gmm, fit_gmm_seeded, gmm_log_density, sample_gmm, GaussianMixture, GmmFit, VARIANCE_FLOOR,
};

use crate::featureset::FeatureDataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShiftError {
    #[error("no points to fit")]
    EmptyInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid shift config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = ShiftError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub components: usize,
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which EM stops.
    pub tol: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        ShiftConfig {
            components: 10,
            max_iters: 200,
            tol: 1e-6,
            mc_samples: 20_000,
            seed: 42,
        }
    }
}

impl ShiftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.components < 1 {
            return Err(ShiftError::InvalidConfig("components must be >= 1".into()));
        }
        if self.mc_samples < 1000 {
            return Err(ShiftError::InvalidConfig(
                "mc_samples must be >= 1000".into(),
            ));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(ShiftError::InvalidConfig(
                "tol must be a non-negative number".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    /// `None` for classes missing from either split.
    pub per_class_js: Vec<Option<f64>>,
    pub standard_error: Vec<Option<f64>>,
    pub config: ShiftConfig,
    pub undefined_classes: Vec<usize>,
    /// Mixtures are fitted in the loaded feature space, whatever layer it
    /// came from.
    pub feature_space: String,
}

fn class_points(ds: &FeatureDataset, class: usize) -> Vec<Vec<f64>> {
    ds.class_samples(class)
        .map(|s| s.features.clone())
        .collect()
}

/// Class `i` uses seed `cfg.seed ^ i` for both fits and for the divergence
/// draws, so a class gives the same answer whether run alone or in parallel.
pub fn covariate_shift(
    train: &FeatureDataset,
    test: &FeatureDataset,
    cfg: &ShiftConfig,
) -> Result<ShiftReport> {
    cfg.validate()?;
    if train.num_classes != test.num_classes || train.feature_dim != test.feature_dim {
        return Err(ShiftError::DimensionMismatch(format!(
            "train has {} classes x {} features, test has {} x {}",
            train.num_classes, train.feature_dim, test.num_classes, test.feature_dim
        )));
    }
    let per_class: Vec<Option<JsEstimate>> = (0..train.num_classes)
        .into_par_iter()
        .map(|class| -> Result<Option<JsEstimate>> {
            let a = class_points(train, class);
            let b = class_points(test, class);
            if a.is_empty() || b.is_empty() {
                return Ok(None);
            }
            let class_cfg = ShiftConfig {
                seed: cfg.seed ^ class as u64,
                ..*cfg
            };
            let p = fit_gmm(&a, &class_cfg)?.mixture;
            let q = fit_gmm(&b, &class_cfg)?.mixture;
            js_divergence(&p, &q, &class_cfg).map(Some)
        })
        .collect::<Result<_>>()?;

    Ok(ShiftReport {
        per_class_js: per_class.iter().map(|e| e.map(|e| e.value)).collect(),
        standard_error: per_class
            .iter()
            .map(|e| e.map(|e| e.standard_error))
            .collect(),
        undefined_classes: per_class
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_none())
            .map(|(i, _)| i)
            .collect(),
        config: *cfg,
        feature_space: "as loaded".to_string(),
    })
}
