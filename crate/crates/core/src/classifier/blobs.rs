//! Isotropic Gaussian class clusters, a desk-scale stand-in for real
//! feature dumps.

use rand_distr::{Distribution, StandardNormal};

use super::{ClassifierError, Result};
use crate::featureset::{FeatureDataset, Sample};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub centers: Vec<Vec<f64>>,
    pub sigmas: Vec<f64>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl BlobSpec {
    /// Class `i` centered at `spacing · e_i` in `nc` dimensions, so every
    /// pair of centers is `spacing · √2` apart.
    pub fn simplex(nc: usize, spacing: f64, sigma: f64, per_class: usize, seed: u64) -> Self {
        let centers = (0..nc)
            .map(|i| {
                let mut c = vec![0.0; nc];
                c[i] = spacing;
                c
            })
            .collect();
        BlobSpec {
            centers,
            sigmas: vec![sigma; nc],
            train_per_class: per_class,
            test_per_class: per_class,
            seed,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.centers.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<()> {
        let dim = self.feature_dim();
        if self.centers.is_empty() || dim == 0 || self.centers.iter().any(|c| c.len() != dim) {
            return Err(ClassifierError::InvalidSpec(
                "centers must be non-empty and equal length".into(),
            ));
        }
        if self.sigmas.len() != self.centers.len()
            || self.sigmas.iter().any(|s| !s.is_finite() || *s <= 0.0)
        {
            return Err(ClassifierError::InvalidSpec(
                "one positive sigma per class".into(),
            ));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(ClassifierError::InvalidSpec(
                "per-class counts must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn draw(&self, name: &str, per_class: usize, stream: u64) -> FeatureDataset {
        let mut r = rng::stream(self.seed, stream);
        let mut ds = FeatureDataset::new(name, self.num_classes(), self.feature_dim());
        for (class, (center, sigma)) in self.centers.iter().zip(&self.sigmas).enumerate() {
            for k in 0..per_class {
                let features = center
                    .iter()
                    .map(|c| {
                        let z: f64 = StandardNormal.sample(&mut r);
                        c + sigma * z
                    })
                    .collect();
                ds.samples
                    .push(Sample::new(format!("{name}-{class}-{k}"), class, features));
            }
        }
        ds
    }
}

/// Train and test sets drawn i.i.d. from the same clusters on separate
/// random streams.
pub fn make_blobs(spec: &BlobSpec) -> Result<(FeatureDataset, FeatureDataset)> {
    spec.validate()?;
    Ok((
        spec.draw("train", spec.train_per_class, 0),
        spec.draw("test", spec.test_per_class, 1),
    ))
}
