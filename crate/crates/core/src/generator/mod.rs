//! Guided generation of extra test points in feature space.
//!
//! A generated set mixes two kinds of points at a requested ratio:
//!
//! - **centroid** points: jittered copies of a class centroid that stay inside
//!   the centroid region (normalized distance `<= r`) and are still predicted
//!   as their class;
//! - **boundary** points: a weakly classified test sample is moved along the
//!   segment towards the centroid of its pair class until the model predicts
//!   the pair class with top-1 confidence in `[theta1, theta2]`, i.e. a weak
//!   misclassification. The point keeps the seed's ground-truth label.
//!
//! Every point is re-checked against the provider; points that fail are kept
//! with `verified = false` so requested counts stay exact.

mod evaluate;
mod export;
mod sampling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use evaluate::{
    evaluate_generated, evaluate_samples, frequency_size, sweep, EvaluationRecord, SweepCell,
    SweepMatrix,
};
pub use export::{
    load_generated, nearest_real_neighbors, parse_provenance, to_feature_dataset, write_generated,
    LoadGeneratedError, ProvenanceRow, NEIGHBORS_FILE, PROVENANCE_FILE,
};
pub use sampling::{
    generate_boundary_sample, generate_centroid_sample, select_boundary_seeds, ClassSeeds,
    BISECTION_STEPS,
};

use crate::classifier::ConfidenceProvider;
use crate::featureset::{FeatureDataset, Sample};
use crate::metrics::{CentroidModel, MetricConfig};
use crate::rng;

/// The distribution choices listed by the original generation procedure.
pub const ALGORITHM_DISTRIBUTION_GRID: [f64; 7] = [0.0, 20.0, 30.0, 50.0, 70.0, 80.0, 100.0];
/// The centroid/boundary splits used for the robustness sweep.
pub const SWEEP_SPLITS: [f64; 5] = [0.0, 30.0, 50.0, 70.0, 100.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error("sample {0} has no confidence vector")]
    MissingConfidences(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("malformed generated set: {0}")]
    Malformed(String),
}

pub type Result<T, E = GenerationError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    /// Centroid percentages enumerated by [`sweep`].
    pub distribution_grid: Vec<f64>,
    /// Generated-set sizes as a percentage of the test-set size.
    pub frequency_grid: Vec<f64>,
    /// Lowest top-1 confidence for a boundary seed; must stay below theta2.
    pub wc_l: f64,
    /// Centroid jitter, as a fraction of the class radius.
    pub sigma_centroid: f64,
    /// Boundary jitter, as a fraction of the class radius.
    pub sigma_boundary: f64,
    pub max_rejection_iters: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            distribution_grid: SWEEP_SPLITS.to_vec(),
            frequency_grid: vec![10.0, 25.0, 50.0, 75.0, 100.0],
            wc_l: 0.40,
            sigma_centroid: 0.10,
            sigma_boundary: 0.02,
            max_rejection_iters: 100,
            seed: 42,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self, metric: &MetricConfig) -> Result<()> {
        let in_range = |g: &[f64]| g.iter().all(|v| (0.0..=100.0).contains(v));
        if !in_range(&self.distribution_grid) || !in_range(&self.frequency_grid) {
            return Err(GenerationError::InvalidConfig(
                "grid entries must lie in [0, 100]".into(),
            ));
        }
        if !(self.wc_l >= 0.0 && self.wc_l < metric.theta2) {
            return Err(GenerationError::InvalidConfig(format!(
                "wc_l = {} must be in [0, theta2 = {})",
                self.wc_l, metric.theta2
            )));
        }
        if !(self.sigma_centroid > 0.0 && self.sigma_boundary > 0.0) {
            return Err(GenerationError::InvalidConfig(
                "jitter scales must be positive".into(),
            ));
        }
        metric
            .validate()
            .map_err(|e| GenerationError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Centroid,
    Boundary,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Centroid => "centroid",
            Region::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSample {
    pub features: Vec<f64>,
    pub oracle_label: usize,
    pub region: Region,
    /// Id of the test sample the point was derived from, or `centroid-<i>`.
    pub seed_id: String,
    /// Boundary points only.
    pub pair_class: Option<usize>,
    /// Position on the seed-to-pair-centroid segment; 0 for centroid points.
    pub t: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTestSet {
    pub name: String,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub samples: Vec<GeneratedSample>,
    pub requested_total: usize,
    pub requested_centroid_pct: f64,
    pub achieved_centroid: usize,
    pub achieved_boundary: usize,
    pub verification_rate: f64,
    /// Classes whose boundary seeds came from the lowest-margin fallback.
    pub fallback_classes: Vec<usize>,
    pub config: GenerationConfig,
    pub metric_config: MetricConfig,
}

/// `n` split over `nc` classes, remainders handed out round-robin starting
/// at class `offset`.
pub fn class_quotas(n: usize, nc: usize, offset: usize) -> Vec<usize> {
    let base = n / nc;
    let extra = n % nc;
    (0..nc)
        .map(|i| base + usize::from((i + nc - offset % nc) % nc < extra))
        .collect()
}

/// Per-class centroid and boundary quotas. The boundary remainder continues
/// where the centroid remainder stopped, so class totals differ by at most 1.
pub fn split_quotas(total: usize, centroid_pct: f64, nc: usize) -> (Vec<usize>, Vec<usize>) {
    let n_centroid = ((total as f64 * centroid_pct / 100.0).round() as usize).min(total);
    let centroid = class_quotas(n_centroid, nc, 0);
    let boundary = class_quotas(total - n_centroid, nc, n_centroid % nc);
    (centroid, boundary)
}

fn check_dims(
    test: &FeatureDataset,
    cm: &CentroidModel,
    provider: &dyn ConfidenceProvider,
) -> Result<()> {
    let ok = cm.num_classes() == test.num_classes
        && cm.feature_dim() == test.feature_dim
        && provider.num_classes() == test.num_classes
        && provider.feature_dim() == test.feature_dim;
    if !ok {
        return Err(GenerationError::DimensionMismatch(format!(
            "test {}x{}, centroids {}x{}, provider {} {}x{}",
            test.num_classes,
            test.feature_dim,
            cm.num_classes(),
            cm.feature_dim(),
            provider.name(),
            provider.num_classes(),
            provider.feature_dim()
        )));
    }
    if test.num_classes < 2 {
        return Err(GenerationError::DimensionMismatch(
            "generation needs at least two classes".into(),
        ));
    }
    Ok(())
}

/// Generates `total` points with `centroid_pct` percent in centroid regions.
///
/// Class `i` draws from streams derived from `(cfg.seed, i)`, so the result
/// does not depend on how classes are scheduled across threads.
pub fn generate_test_set(
    test: &FeatureDataset,
    cm: &CentroidModel,
    provider: &dyn ConfidenceProvider,
    total: usize,
    centroid_pct: f64,
    cfg: &GenerationConfig,
    metric: &MetricConfig,
) -> Result<GeneratedTestSet> {
    cfg.validate(metric)?;
    check_dims(test, cm, provider)?;
    if !(0.0..=100.0).contains(&centroid_pct) {
        return Err(GenerationError::InvalidConfig(format!(
            "centroid percentage {centroid_pct} outside [0, 100]"
        )));
    }
    let nc = test.num_classes;
    let (centroid_q, boundary_q) = split_quotas(total, centroid_pct, nc);
    let need_boundary = boundary_q.iter().any(|&q| q > 0);
    let seeds = if need_boundary {
        select_boundary_seeds(test, cfg, metric)?
    } else {
        Vec::new()
    };

    let per_class: Vec<Vec<GeneratedSample>> = (0..nc)
        .into_par_iter()
        .map(|class| {
            let class_seed = rng::derive(cfg.seed, class as u64);
            let mut out = Vec::with_capacity(centroid_q[class] + boundary_q[class]);
            let mut crng = rng::stream(class_seed, 0);
            for _ in 0..centroid_q[class] {
                out.push(generate_centroid_sample(
                    class, cm, provider, cfg, metric, &mut crng,
                ));
            }
            if boundary_q[class] > 0 {
                let mut brng = rng::stream(class_seed, 1);
                let ids = &seeds[class].indices;
                let synthetic;
                let seed_list: Vec<&Sample> = if ids.is_empty() {
                    // No test sample of this class: start from its centroid.
                    let x = cm.centroids[class].clone();
                    synthetic = Sample::new(format!("centroid-{class}"), class, x.clone())
                        .with_confidence(provider.confidences(&x));
                    vec![&synthetic]
                } else {
                    ids.iter().map(|&i| &test.samples[i]).collect()
                };
                for k in 0..boundary_q[class] {
                    let seed = seed_list[k % seed_list.len()];
                    out.push(
                        generate_boundary_sample(seed, cm, provider, cfg, metric, &mut brng)
                            .expect("seeds carry confidences"),
                    );
                }
            }
            out
        })
        .collect();

    let samples: Vec<GeneratedSample> = per_class.into_iter().flatten().collect();
    let achieved_centroid = samples
        .iter()
        .filter(|s| s.region == Region::Centroid)
        .count();
    let verified = samples.iter().filter(|s| s.verified).count();
    Ok(GeneratedTestSet {
        name: format!("{}-gen-{}-{}", test.name, centroid_pct, total),
        num_classes: nc,
        feature_dim: test.feature_dim,
        achieved_boundary: samples.len() - achieved_centroid,
        achieved_centroid,
        verification_rate: if samples.is_empty() {
            0.0
        } else {
            verified as f64 / samples.len() as f64
        },
        samples,
        requested_total: total,
        requested_centroid_pct: centroid_pct,
        fallback_classes: seeds
            .iter()
            .enumerate()
            .filter(|(_, s)| s.fallback)
            .map(|(i, _)| i)
            .collect(),
        config: cfg.clone(),
        metric_config: *metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_arithmetic() {
        let (c, b) = split_quotas(100, 100.0, 10);
        assert_eq!(c, vec![10; 10]);
        assert_eq!(b, vec![0; 10]);

        let (c, b) = split_quotas(103, 0.0, 10);
        assert_eq!(c, vec![0; 10]);
        assert_eq!(b, vec![11, 11, 11, 10, 10, 10, 10, 10, 10, 10]);

        let (c, b) = split_quotas(12, 50.0, 10);
        let totals: Vec<usize> = c.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert_eq!(c.iter().sum::<usize>(), 6);
        assert_eq!(b.iter().sum::<usize>(), 6);
        let (lo, hi) = (totals.iter().min().unwrap(), totals.iter().max().unwrap());
        assert!(hi - lo <= 1);
    }

    #[test]
    fn config_validation() {
        let m = MetricConfig::default();
        assert!(GenerationConfig::default().validate(&m).is_ok());
        let c = GenerationConfig {
            wc_l: 0.6,
            ..Default::default()
        };
        assert!(c.validate(&m).is_err());
        let c = GenerationConfig {
            frequency_grid: vec![120.0],
            ..Default::default()
        };
        assert!(c.validate(&m).is_err());
        let c = GenerationConfig {
            distribution_grid: ALGORITHM_DISTRIBUTION_GRID.to_vec(),
            ..Default::default()
        };
        assert!(c.validate(&m).is_ok());
    }
}
