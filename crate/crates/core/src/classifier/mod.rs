//! Confidence providers: anything that maps a feature vector to class
//! probabilities. Two reference providers ship with the crate so the whole
//! pipeline runs without an external model; real-model confidences arrive
//! through `confidences.csv` instead.

mod blobs;
mod logistic;
mod nearest;

use thiserror::Error;

pub use blobs::{make_blobs, BlobSpec};
pub use logistic::{
    loss_and_gradient, parse_model_json, train_logistic, LogisticConfig, LogisticModel,
    MODEL_FORMAT_VERSION,
};
pub use nearest::NearestCentroidSoftmax;

use crate::featureset::FeatureDataset;
use crate::vecmath::argmax;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training data holds fewer than two classes")]
    DegenerateLabels,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid blob spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = ClassifierError> = std::result::Result<T, E>;

pub trait ConfidenceProvider: Send + Sync {
    fn name(&self) -> &str;
    fn num_classes(&self) -> usize;
    fn feature_dim(&self) -> usize;
    /// Class probabilities for `x`; entries in `[0, 1]` summing to 1.
    fn confidences(&self, x: &[f64]) -> Vec<f64>;

    /// Argmax of [`Self::confidences`], ties to the lowest index.
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.confidences(x))
    }
}

fn check_dims(provider: &dyn ConfidenceProvider, ds: &FeatureDataset) -> Result<()> {
    if provider.feature_dim() != ds.feature_dim || provider.num_classes() != ds.num_classes {
        return Err(ClassifierError::DimensionMismatch(format!(
            "provider {} expects {} classes x {} features, dataset has {} x {}",
            provider.name(),
            provider.num_classes(),
            provider.feature_dim(),
            ds.num_classes,
            ds.feature_dim
        )));
    }
    Ok(())
}

/// Copy of `ds` with every sample's confidence vector replaced by the
/// provider's output.
pub fn predict_confidences(
    provider: &dyn ConfidenceProvider,
    ds: &FeatureDataset,
) -> Result<FeatureDataset> {
    check_dims(provider, ds)?;
    let mut out = ds.clone();
    for s in &mut out.samples {
        s.confidence = Some(provider.confidences(&s.features));
    }
    Ok(out)
}

/// Fraction of samples whose predicted class equals the label.
pub fn accuracy(provider: &dyn ConfidenceProvider, ds: &FeatureDataset) -> Result<f64> {
    check_dims(provider, ds)?;
    if ds.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let hits = ds
        .samples
        .iter()
        .filter(|s| provider.predict(&s.features) == s.label)
        .count();
    Ok(hits as f64 / ds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featureset::Sample;

    struct Uniform(usize);

    impl ConfidenceProvider for Uniform {
        fn name(&self) -> &str {
            "uniform"
        }
        fn num_classes(&self) -> usize {
            self.0
        }
        fn feature_dim(&self) -> usize {
            1
        }
        fn confidences(&self, _: &[f64]) -> Vec<f64> {
            vec![1.0 / self.0 as f64; self.0]
        }
    }

    fn labeled(labels: &[usize], nc: usize) -> FeatureDataset {
        let mut ds = FeatureDataset::new("l", nc, 1);
        for (i, &l) in labels.iter().enumerate() {
            ds.samples
                .push(Sample::new(format!("{i}"), l, vec![l as f64]));
        }
        ds
    }

    #[test]
    fn uniform_provider_predicts_class_zero() {
        let ds = labeled(&[0, 1, 2, 0, 2, 1, 1], 3);
        assert_eq!(accuracy(&Uniform(3), &ds).unwrap(), 2.0 / 7.0);
    }

    #[test]
    fn perfect_provider() {
        let ds = labeled(&[0, 1, 2, 1], 3);
        let p = NearestCentroidSoftmax::new(vec![vec![0.0], vec![1.0], vec![2.0]], 0.01).unwrap();
        assert_eq!(accuracy(&p, &ds).unwrap(), 1.0);
    }

    #[test]
    fn empty_and_mismatch() {
        let ds = FeatureDataset::new("e", 3, 1);
        assert!(matches!(
            accuracy(&Uniform(3), &ds),
            Err(ClassifierError::EmptyDataset)
        ));
        let ds = labeled(&[0], 2);
        assert!(matches!(
            predict_confidences(&Uniform(3), &ds),
            Err(ClassifierError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn attached_confidences_match_provider() {
        let ds = labeled(&[0, 1, 2, 1, 0], 3);
        let p = NearestCentroidSoftmax::new(vec![vec![0.0], vec![1.0], vec![2.5]], 1.0).unwrap();
        let once = predict_confidences(&p, &ds).unwrap();
        for s in &once.samples {
            assert_eq!(
                argmax(s.confidence.as_ref().unwrap()),
                p.predict(&s.features)
            );
        }
        let twice = predict_confidences(&p, &once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(
            once.samples.iter().map(|s| s.label).collect::<Vec<_>>(),
            vec![0, 1, 2, 1, 0]
        );
    }
}
