use serde::{Deserialize, Serialize};

use super::{ClassifierError, ConfidenceProvider, Result};
use crate::vecmath::{euclidean, softmax};

/// `p_i ∝ exp(-‖x - c_i‖ / τ)`. Uses plain (not squared) distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestCentroidSoftmax {
    centroids: Vec<Vec<f64>>,
    temperature: f64,
}

impl NearestCentroidSoftmax {
    pub fn new(centroids: Vec<Vec<f64>>, temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(ClassifierError::InvalidModel(format!(
                "temperature {temperature} must be positive"
            )));
        }
        if centroids.is_empty() {
            return Err(ClassifierError::InvalidModel("no centroids".into()));
        }
        let dim = centroids[0].len();
        if dim == 0 || centroids.iter().any(|c| c.len() != dim) {
            return Err(ClassifierError::InvalidModel("ragged centroids".into()));
        }
        Ok(NearestCentroidSoftmax {
            centroids,
            temperature,
        })
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

impl ConfidenceProvider for NearestCentroidSoftmax {
    fn name(&self) -> &str {
        "centroid"
    }

    fn num_classes(&self) -> usize {
        self.centroids.len()
    }

    fn feature_dim(&self) -> usize {
        self.centroids[0].len()
    }

    fn confidences(&self, x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .centroids
            .iter()
            .map(|c| -euclidean(x, c) / self.temperature)
            .collect();
        softmax(&logits)
    }
}
