use serde::{Deserialize, Serialize};

use super::{
    generate_test_set, GeneratedSample, GeneratedTestSet, GenerationConfig, Region, Result,
};
use crate::classifier::{accuracy, ConfidenceProvider};
use crate::featureset::FeatureDataset;
use crate::metrics::{CentroidModel, MetricConfig};
use crate::rng;

/// Accuracy of a provider on a generated set. `None` marks an empty group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub total: usize,
    pub overall: Option<f64>,
    pub centroid: Option<f64>,
    pub boundary: Option<f64>,
    pub per_class: Vec<Option<f64>>,
    pub centroid_count: usize,
    pub boundary_count: usize,
    pub verification_rate: Option<f64>,
}

fn frac(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

/// Scores generated points against their oracle labels.
pub fn evaluate_samples(
    samples: &[GeneratedSample],
    num_classes: usize,
    provider: &dyn ConfidenceProvider,
) -> EvaluationRecord {
    let mut hits = [0usize; 2];
    let mut counts = [0usize; 2];
    let mut class_hits = vec![0usize; num_classes];
    let mut class_counts = vec![0usize; num_classes];
    let mut verified = 0;
    for s in samples {
        let r = match s.region {
            Region::Centroid => 0,
            Region::Boundary => 1,
        };
        let ok = provider.predict(&s.features) == s.oracle_label;
        counts[r] += 1;
        class_counts[s.oracle_label] += 1;
        if ok {
            hits[r] += 1;
            class_hits[s.oracle_label] += 1;
        }
        verified += usize::from(s.verified);
    }
    EvaluationRecord {
        total: samples.len(),
        overall: frac(hits[0] + hits[1], samples.len()),
        centroid: frac(hits[0], counts[0]),
        boundary: frac(hits[1], counts[1]),
        per_class: class_hits
            .iter()
            .zip(&class_counts)
            .map(|(&h, &n)| frac(h, n))
            .collect(),
        centroid_count: counts[0],
        boundary_count: counts[1],
        verification_rate: frac(verified, samples.len()),
    }
}

pub fn evaluate_generated(
    gen: &GeneratedTestSet,
    provider: &dyn ConfidenceProvider,
) -> EvaluationRecord {
    evaluate_samples(&gen.samples, gen.num_classes, provider)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub frequency_pct: f64,
    pub samples: usize,
    pub centroid_pct: f64,
    pub achieved_centroid: usize,
    pub achieved_boundary: usize,
    pub evaluation: EvaluationRecord,
}

/// One generated-and-scored set per (size, split) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMatrix {
    pub dataset: String,
    pub provider: String,
    /// Provider accuracy on the original test set.
    pub accuracy_full: f64,
    pub test_size: usize,
    pub cells: Vec<SweepCell>,
}

/// Generated-set size for a frequency given as a percentage of the test set.
pub fn frequency_size(test_size: usize, pct: f64) -> usize {
    ((test_size as f64 * pct / 100.0).round() as usize).max(1)
}

/// Runs every `frequency_grid × distribution_grid` cell. Cell `k` (row-major)
/// uses the generation seed `derive(cfg.seed, k)`.
pub fn sweep(
    test: &FeatureDataset,
    cm: &CentroidModel,
    provider: &dyn ConfidenceProvider,
    cfg: &GenerationConfig,
    metric: &MetricConfig,
) -> Result<SweepMatrix> {
    let accuracy_full = accuracy(provider, test)
        .map_err(|e| super::GenerationError::DimensionMismatch(e.to_string()))?;
    let mut cells = Vec::new();
    let mut k = 0u64;
    for &freq in &cfg.frequency_grid {
        let size = frequency_size(test.len(), freq);
        for &split in &cfg.distribution_grid {
            let cell_cfg = GenerationConfig {
                seed: rng::derive(cfg.seed, k),
                ..cfg.clone()
            };
            k += 1;
            let gen = generate_test_set(test, cm, provider, size, split, &cell_cfg, metric)?;
            cells.push(SweepCell {
                frequency_pct: freq,
                samples: size,
                centroid_pct: split,
                achieved_centroid: gen.achieved_centroid,
                achieved_boundary: gen.achieved_boundary,
                evaluation: evaluate_generated(&gen, provider),
            });
        }
    }
    Ok(SweepMatrix {
        dataset: test.name.clone(),
        provider: provider.name().to_string(),
        accuracy_full,
        test_size: test.len(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::NearestCentroidSoftmax;

    struct Fixed;

    impl ConfidenceProvider for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn num_classes(&self) -> usize {
            2
        }
        fn feature_dim(&self) -> usize {
            1
        }
        fn confidences(&self, x: &[f64]) -> Vec<f64> {
            if x[0] < 0.0 {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            }
        }
    }

    fn gs(x: f64, label: usize, region: Region) -> GeneratedSample {
        GeneratedSample {
            features: vec![x],
            oracle_label: label,
            region,
            seed_id: "s".into(),
            pair_class: None,
            t: 0.0,
            verified: true,
        }
    }

    #[test]
    fn per_region_accuracy_and_empty_region() {
        let samples = vec![
            gs(-1.0, 0, Region::Centroid),
            gs(1.0, 1, Region::Centroid),
            gs(1.0, 0, Region::Centroid),
        ];
        let rec = evaluate_samples(&samples, 2, &Fixed);
        assert_eq!(rec.overall, Some(2.0 / 3.0));
        assert_eq!(rec.centroid, Some(2.0 / 3.0));
        assert_eq!(rec.boundary, None);
        assert_eq!(rec.per_class, vec![Some(0.5), Some(1.0)]);

        let empty = evaluate_samples(&[], 2, &Fixed);
        assert_eq!(empty.overall, None);
    }

    #[test]
    fn frequency_sizes_match_percent_of_test_set() {
        let sizes: Vec<usize> = [1.0, 3.0, 7.0, 10.0]
            .iter()
            .map(|&p| frequency_size(26032, p))
            .collect();
        assert_eq!(sizes, vec![260, 781, 1822, 2603]);
    }

    #[test]
    fn single_cell_sweep() {
        let spec = crate::classifier::BlobSpec::simplex(3, 6.0, 1.0, 30, 5);
        let (train, test) = crate::classifier::make_blobs(&spec).unwrap();
        let cm = crate::metrics::compute_centroids(&train, "train").unwrap();
        let p = NearestCentroidSoftmax::new(cm.centroids.clone(), 1.0).unwrap();
        let test = crate::classifier::predict_confidences(&p, &test).unwrap();
        let cfg = GenerationConfig {
            frequency_grid: vec![10.0],
            distribution_grid: vec![50.0],
            ..Default::default()
        };
        let m = sweep(&test, &cm, &p, &cfg, &MetricConfig::default()).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.cells[0].samples, 9);
        assert_eq!(
            m,
            sweep(&test, &cm, &p, &cfg, &MetricConfig::default()).unwrap()
        );
    }
}
