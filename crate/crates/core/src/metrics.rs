//! The four test-set quality metrics: equivalence partitioning (EP),
//! centroid positioning (CP), boundary conditioning (BC) and pairwise
//! boundary conditioning (PBC).
//!
//! CP measures distances normalized by a per-class radius `R_i`, the 95th
//! percentile of training distances to the class centroid, so the region
//! threshold `r` is unit-free. BC and PBC read the top-1 entry of each
//! sample's confidence vector; a sample is "boundary" when that entry lies in
//! the closed interval `[theta1, theta2]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featureset::{stats, FeatureDataset};
use crate::vecmath::{argmax, argmax_excluding, euclidean, quantile_sorted};

/// Percentile of training distances used as the normalization radius.
pub const RADIUS_PERCENTILE: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample {0} has no confidence vector")]
    MissingConfidences(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid metric config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Centroid-region radius in normalized-distance units.
    pub r: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            r: 0.5,
            theta1: 0.40,
            theta2: 0.60,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(MetricsError::InvalidConfig(format!(
                "r = {} must be >= 0",
                self.r
            )));
        }
        if !(0.0 <= self.theta1 && self.theta1 < self.theta2 && self.theta2 <= 1.0) {
            return Err(MetricsError::InvalidConfig(format!(
                "need 0 <= theta1 < theta2 <= 1, got [{}, {}]",
                self.theta1, self.theta2
            )));
        }
        Ok(())
    }

    pub fn in_boundary_band(&self, top1: f64) -> bool {
        self.theta1 <= top1 && top1 <= self.theta2
    }
}

/// Per-class centroids and normalization radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    pub centroids: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    /// Which split the centroids came from, "train" or "test".
    pub source: String,
}

impl CentroidModel {
    pub fn num_classes(&self) -> usize {
        self.centroids.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// `‖x − c_i‖ / R_i`.
    pub fn normalized_distance(&self, x: &[f64], class: usize) -> f64 {
        euclidean(x, &self.centroids[class]) / self.radii[class]
    }
}

/// Class means plus 95th-percentile radii; a zero radius falls back to 1.
pub fn compute_centroids(data: &FeatureDataset, source: &str) -> Result<CentroidModel> {
    let dim = data.feature_dim;
    let mut sums = vec![vec![0.0; dim]; data.num_classes];
    let mut counts = vec![0usize; data.num_classes];
    for s in &data.samples {
        counts[s.label] += 1;
        for (acc, v) in sums[s.label].iter_mut().zip(&s.features) {
            *acc += v;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(MetricsError::EmptyClass(empty));
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(sum, &n)| sum.into_iter().map(|v| v / n as f64).collect())
        .collect();

    let mut dists = vec![Vec::new(); data.num_classes];
    for s in &data.samples {
        dists[s.label].push(euclidean(&s.features, &centroids[s.label]));
    }
    let radii = dists
        .into_iter()
        .map(|mut d| {
            d.sort_by(f64::total_cmp);
            let r = quantile_sorted(&d, RADIUS_PERCENTILE);
            if r > 0.0 {
                r
            } else {
                1.0
            }
        })
        .collect();
    Ok(CentroidModel {
        centroids,
        radii,
        source: source.to_string(),
    })
}

/// `EP_i = ns_i · nc / ns`.
pub fn equivalence_partitioning(test: &FeatureDataset) -> Result<Vec<f64>> {
    let st = stats(test);
    if st.total == 0 {
        return Err(MetricsError::EmptyDataset);
    }
    let nc = test.num_classes;
    Ok(st
        .per_class_counts
        .iter()
        .map(|&n| (n * nc) as f64 / st.total as f64)
        .collect())
}

/// Fraction of each class within normalized distance `r` of its centroid.
/// `None` marks a class with no test samples.
pub fn centroid_positioning(
    test: &FeatureDataset,
    model: &CentroidModel,
    cfg: &MetricConfig,
) -> Result<Vec<Option<f64>>> {
    if model.num_classes() != test.num_classes || model.feature_dim() != test.feature_dim {
        return Err(MetricsError::DimensionMismatch(format!(
            "centroid model is {}x{}, dataset is {}x{}",
            model.num_classes(),
            model.feature_dim(),
            test.num_classes,
            test.feature_dim
        )));
    }
    let mut inside = vec![0usize; test.num_classes];
    let mut counts = vec![0usize; test.num_classes];
    for s in &test.samples {
        counts[s.label] += 1;
        if model.normalized_distance(&s.features, s.label) <= cfg.r {
            inside[s.label] += 1;
        }
    }
    Ok(ratio(&inside, &counts))
}

fn ratio(hits: &[usize], counts: &[usize]) -> Vec<Option<f64>> {
    hits.iter()
        .zip(counts)
        .map(|(&h, &n)| (n > 0).then(|| h as f64 / n as f64))
        .collect()
}

/// Raw boundary tallies behind BC and PBC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCounts {
    pub per_class_counts: Vec<usize>,
    /// Boundary samples per class.
    pub boundary: Vec<usize>,
    /// `pairs[i][j]`: boundary samples of class `i` whose partner is `j`.
    /// Rows sum to `boundary[i]`; the diagonal is always zero.
    pub pairs: Vec<Vec<usize>>,
}

/// The class a boundary sample of class `label` is paired with: the most
/// probable class other than its own label.
pub fn pair_partner(confidence: &[f64], label: usize) -> Option<usize> {
    argmax_excluding(confidence, label).map(|(j, _)| j)
}

pub fn top1(confidence: &[f64]) -> f64 {
    confidence[argmax(confidence)]
}

pub fn boundary_counts(test: &FeatureDataset, cfg: &MetricConfig) -> Result<BoundaryCounts> {
    let nc = test.num_classes;
    let mut out = BoundaryCounts {
        per_class_counts: vec![0; nc],
        boundary: vec![0; nc],
        pairs: vec![vec![0; nc]; nc],
    };
    for s in &test.samples {
        let conf = s
            .confidence
            .as_deref()
            .ok_or_else(|| MetricsError::MissingConfidences(s.id.clone()))?;
        out.per_class_counts[s.label] += 1;
        if cfg.in_boundary_band(top1(conf)) {
            out.boundary[s.label] += 1;
            if let Some(j) = pair_partner(conf, s.label) {
                out.pairs[s.label][j] += 1;
            }
        }
    }
    Ok(out)
}

/// Fraction of each class whose top-1 confidence lies in `[theta1, theta2]`.
pub fn boundary_conditioning(
    test: &FeatureDataset,
    cfg: &MetricConfig,
) -> Result<Vec<Option<f64>>> {
    let counts = boundary_counts(test, cfg)?;
    Ok(ratio(&counts.boundary, &counts.per_class_counts))
}

/// Symmetric pair matrix: `(pairs[i][j] + pairs[j][i]) / (ns_i + ns_j)`,
/// zero diagonal.
pub fn pairwise_from_counts(counts: &BoundaryCounts) -> Vec<Vec<f64>> {
    let nc = counts.per_class_counts.len();
    let mut m = vec![vec![0.0; nc]; nc];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let denom = counts.per_class_counts[i] + counts.per_class_counts[j];
            if i != j && denom > 0 {
                *v = (counts.pairs[i][j] + counts.pairs[j][i]) as f64 / denom as f64;
            }
        }
    }
    m
}

pub fn pairwise_boundary_conditioning(
    test: &FeatureDataset,
    cfg: &MetricConfig,
) -> Result<Vec<Vec<f64>>> {
    Ok(pairwise_from_counts(&boundary_counts(test, cfg)?))
}

/// All four metrics for one test set, with centroids from the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub dataset_name: String,
    pub config: MetricConfig,
    pub per_class_counts: Vec<usize>,
    pub ep: Vec<f64>,
    pub cp: Vec<Option<f64>>,
    /// `None` when the test set carries no confidences.
    pub bc: Option<Vec<Option<f64>>>,
    pub pbc: Option<Vec<Vec<f64>>>,
    pub boundary_counts: Option<BoundaryCounts>,
    pub centroids: CentroidModel,
    /// Classes with no test samples; their CP and BC entries are null.
    pub undefined_classes: Vec<usize>,
}

pub fn check_compatible(train: &FeatureDataset, test: &FeatureDataset) -> Result<()> {
    if train.num_classes != test.num_classes || train.feature_dim != test.feature_dim {
        return Err(MetricsError::DimensionMismatch(format!(
            "train has {} classes x {} features, test has {} x {}",
            train.num_classes, train.feature_dim, test.num_classes, test.feature_dim
        )));
    }
    Ok(())
}

/// BC and PBC are left out (`None`) when the test set lacks confidences.
pub fn quality_report(
    train: &FeatureDataset,
    test: &FeatureDataset,
    cfg: &MetricConfig,
) -> Result<QualityReport> {
    cfg.validate()?;
    check_compatible(train, test)?;
    let centroids = compute_centroids(train, "train")?;
    let ep = equivalence_partitioning(test)?;
    let cp = centroid_positioning(test, &centroids, cfg)?;
    let per_class_counts = stats(test).per_class_counts;
    let (bc, pbc, counts) = if test.has_confidences() {
        let counts = boundary_counts(test, cfg)?;
        (
            Some(ratio(&counts.boundary, &counts.per_class_counts)),
            Some(pairwise_from_counts(&counts)),
            Some(counts),
        )
    } else {
        (None, None, None)
    };
    let undefined_classes = per_class_counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n == 0)
        .map(|(i, _)| i)
        .collect();
    Ok(QualityReport {
        dataset_name: test.name.clone(),
        config: *cfg,
        per_class_counts,
        ep,
        cp,
        bc,
        pbc,
        boundary_counts: counts,
        centroids,
        undefined_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featureset::Sample;

    fn ds(nc: usize, rows: &[(usize, Vec<f64>)]) -> FeatureDataset {
        let dim = rows.first().map_or(1, |r| r.1.len());
        let mut d = FeatureDataset::new("m", nc, dim);
        for (i, (l, f)) in rows.iter().enumerate() {
            d.samples.push(Sample::new(format!("s{i}"), *l, f.clone()));
        }
        d
    }

    fn with_conf(nc: usize, rows: &[(usize, Vec<f64>)]) -> FeatureDataset {
        let mut d = FeatureDataset::new("c", nc, 1);
        for (i, (l, c)) in rows.iter().enumerate() {
            d.samples
                .push(Sample::new(format!("s{i}"), *l, vec![0.0]).with_confidence(c.clone()));
        }
        d
    }

    #[test]
    fn centroid_is_mean() {
        let d = ds(1, &[(0, vec![0.0, 0.0]), (0, vec![2.0, 0.0])]);
        let cm = compute_centroids(&d, "train").unwrap();
        assert_eq!(cm.centroids[0], vec![1.0, 0.0]);
        assert_eq!(cm.radii[0], 1.0);
    }

    #[test]
    fn single_sample_radius_falls_back_to_one() {
        let d = ds(2, &[(0, vec![3.0]), (1, vec![-1.0]), (1, vec![1.0])]);
        let cm = compute_centroids(&d, "train").unwrap();
        assert_eq!(cm.radii[0], 1.0);
        assert_eq!(cm.radii[1], 1.0);
    }

    #[test]
    fn empty_class_errors() {
        let d = ds(3, &[(0, vec![3.0]), (2, vec![1.0])]);
        assert_eq!(
            compute_centroids(&d, "train"),
            Err(MetricsError::EmptyClass(1))
        );
    }

    #[test]
    fn ep_examples() {
        let mut rows = Vec::new();
        for (class, n) in [40, 30, 20, 10].into_iter().enumerate() {
            rows.extend((0..n).map(|_| (class, vec![0.0])));
        }
        assert_eq!(
            equivalence_partitioning(&ds(4, &rows)).unwrap(),
            vec![1.6, 1.2, 0.8, 0.4]
        );

        let rows: Vec<_> = (0..10).map(|_| (1, vec![0.0])).collect();
        assert_eq!(
            equivalence_partitioning(&ds(2, &rows)).unwrap(),
            vec![0.0, 2.0]
        );

        let rows: Vec<_> = (0..10_000).map(|i| (i % 10, vec![0.0])).collect();
        assert_eq!(
            equivalence_partitioning(&ds(10, &rows)).unwrap(),
            vec![1.0; 10]
        );

        assert_eq!(
            equivalence_partitioning(&FeatureDataset::new("e", 2, 1)),
            Err(MetricsError::EmptyDataset)
        );
    }

    #[test]
    fn normalized_distance_examples() {
        let cm = CentroidModel {
            centroids: vec![vec![0.0, 0.0]],
            radii: vec![5.0],
            source: "train".into(),
        };
        assert_eq!(cm.normalized_distance(&[0.0, 0.0], 0), 0.0);
        assert_eq!(cm.normalized_distance(&[3.0, 4.0], 0), 1.0);
        assert_eq!(cm.normalized_distance(&[0.0, -5.0], 0), 1.0);
    }

    #[test]
    fn cp_examples() {
        let cm = CentroidModel {
            centroids: vec![vec![1.0], vec![-1.0]],
            radii: vec![1.0, 1.0],
            source: "train".into(),
        };
        let test = ds(2, &[(0, vec![1.0]), (0, vec![1.0]), (1, vec![-0.5])]);
        let cfg = MetricConfig::default();
        assert_eq!(
            centroid_positioning(&test, &cm, &cfg).unwrap(),
            vec![Some(1.0), Some(1.0)]
        );
        let tight = MetricConfig { r: 0.0, ..cfg };
        assert_eq!(
            centroid_positioning(&test, &cm, &tight).unwrap(),
            vec![Some(1.0), Some(0.0)]
        );
        let only0 = ds(2, &[(0, vec![1.2])]);
        assert_eq!(
            centroid_positioning(&only0, &cm, &tight).unwrap(),
            vec![Some(0.0), None]
        );
    }

    #[test]
    fn bc_examples() {
        let cfg = MetricConfig::default();
        let d = with_conf(2, &[(0, vec![0.99, 0.01]), (0, vec![0.98, 0.02])]);
        assert_eq!(boundary_conditioning(&d, &cfg).unwrap()[0], Some(0.0));

        let d = with_conf(
            2,
            &[
                (0, vec![0.5, 0.5]),
                (0, vec![0.9, 0.1]),
                (0, vec![0.55, 0.45]),
                (0, vec![0.4, 0.6]),
            ],
        );
        assert_eq!(boundary_conditioning(&d, &cfg).unwrap()[0], Some(0.75));

        let full = MetricConfig {
            theta1: 0.0,
            theta2: 1.0,
            ..cfg
        };
        let d = with_conf(2, &[(0, vec![0.99, 0.01]), (1, vec![0.3, 0.7])]);
        assert_eq!(
            boundary_conditioning(&d, &full).unwrap(),
            vec![Some(1.0), Some(1.0)]
        );
    }

    #[test]
    fn bc_requires_confidences() {
        let d = ds(2, &[(0, vec![0.0])]);
        assert_eq!(
            boundary_conditioning(&d, &MetricConfig::default()),
            Err(MetricsError::MissingConfidences("s0".into()))
        );
        assert!(pairwise_boundary_conditioning(&d, &MetricConfig::default()).is_err());
    }

    #[test]
    fn pbc_two_class_formula() {
        let cfg = MetricConfig::default();
        let d = with_conf(
            2,
            &[
                (0, vec![0.5, 0.5]),
                (0, vec![0.9, 0.1]),
                (0, vec![0.45, 0.55]),
                (1, vec![0.42, 0.58]),
                (1, vec![0.05, 0.95]),
            ],
        );
        let m = pairwise_boundary_conditioning(&d, &cfg).unwrap();
        assert_eq!(m[0][1], 3.0 / 5.0);
        assert_eq!(m[1][0], m[0][1]);
        assert_eq!(m[0][0], 0.0);

        let none = with_conf(2, &[(0, vec![0.99, 0.01]), (1, vec![0.0, 1.0])]);
        assert_eq!(
            pairwise_boundary_conditioning(&none, &cfg).unwrap(),
            vec![vec![0.0; 2]; 2]
        );
    }

    #[test]
    fn misclassified_boundary_sample_pairs_with_predicted_class() {
        let cfg = MetricConfig::default();
        // top-1 is class 2, runner-up is the true class 0.
        let d = with_conf(3, &[(0, vec![0.4, 0.05, 0.55])]);
        let c = boundary_counts(&d, &cfg).unwrap();
        assert_eq!(c.pairs[0], vec![0, 0, 1]);
        assert_eq!(c.boundary[0], 1);
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        let bad = MetricConfig {
            theta1: 0.7,
            theta2: 0.6,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MetricConfig {
            r: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quality_report_one_point_per_class() {
        let train = ds(
            3,
            &[
                (0, vec![0.0, 0.0]),
                (1, vec![5.0, 1.0]),
                (2, vec![-3.0, 2.0]),
            ],
        );
        let r = quality_report(&train, &train, &MetricConfig::default()).unwrap();
        assert_eq!(r.cp, vec![Some(1.0); 3]);
        assert_eq!(r.ep, vec![1.0; 3]);
        assert!(r.bc.is_none());
        assert!(r.undefined_classes.is_empty());

        let other = ds(3, &[(0, vec![0.0, 0.0, 1.0])]);
        assert!(matches!(
            quality_report(&train, &other, &MetricConfig::default()),
            Err(MetricsError::DimensionMismatch(_))
        ));
    }
}
