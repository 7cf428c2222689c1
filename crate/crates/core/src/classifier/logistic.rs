//! Multinomial logistic regression trained by full-batch gradient descent.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, ConfidenceProvider, Result};
use crate::featureset::FeatureDataset;
use crate::vecmath::softmax;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Weight of the `½‖W‖²` penalty. Biases are not penalized.
    pub l2: f64,
    /// Echoed into `model.json`; full-batch descent from zero weights draws
    /// no randomness.
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 0.1,
            epochs: 200,
            l2: 1e-4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub config: LogisticConfig,
    pub final_loss: f64,
}

fn logits(weights: &[Vec<f64>], biases: &[f64], x: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .zip(biases)
        .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// Mean cross-entropy plus `½ l2 ‖W‖²`, with gradients for `W` and `b`.
pub fn loss_and_gradient(
    weights: &[Vec<f64>],
    biases: &[f64],
    data: &FeatureDataset,
    l2: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let nc = weights.len();
    let dim = data.feature_dim;
    let n = data.len().max(1) as f64;
    let mut loss = 0.0;
    let mut gw = vec![vec![0.0; dim]; nc];
    let mut gb = vec![0.0; nc];
    for s in &data.samples {
        let p = softmax(&logits(weights, biases, &s.features));
        loss -= p[s.label].max(f64::MIN_POSITIVE).ln();
        for c in 0..nc {
            let err = p[c] - if c == s.label { 1.0 } else { 0.0 };
            gb[c] += err;
            for (g, v) in gw[c].iter_mut().zip(&s.features) {
                *g += err * v;
            }
        }
    }
    loss /= n;
    gb.iter_mut().for_each(|g| *g /= n);
    let mut penalty = 0.0;
    for (grow, wrow) in gw.iter_mut().zip(weights) {
        for (g, w) in grow.iter_mut().zip(wrow) {
            *g = *g / n + l2 * w;
            penalty += w * w;
        }
    }
    (loss + 0.5 * l2 * penalty, gw, gb)
}

pub fn train_logistic(train: &FeatureDataset, cfg: &LogisticConfig) -> Result<LogisticModel> {
    let mut present = vec![false; train.num_classes];
    for s in &train.samples {
        present[s.label] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(ClassifierError::DegenerateLabels);
    }
    let nc = train.num_classes;
    let mut weights = vec![vec![0.0; train.feature_dim]; nc];
    let mut biases = vec![0.0; nc];
    for _ in 0..cfg.epochs {
        let (_, gw, gb) = loss_and_gradient(&weights, &biases, train, cfg.l2);
        for (wrow, grow) in weights.iter_mut().zip(&gw) {
            for (w, g) in wrow.iter_mut().zip(grow) {
                *w -= cfg.learning_rate * g;
            }
        }
        for (b, g) in biases.iter_mut().zip(&gb) {
            *b -= cfg.learning_rate * g;
        }
    }
    let (final_loss, _, _) = loss_and_gradient(&weights, &biases, train, cfg.l2);
    Ok(LogisticModel {
        weights,
        biases,
        config: *cfg,
        final_loss,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    feature_dim: usize,
    num_classes: usize,
    /// Row-major `num_classes × feature_dim`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    config: LogisticConfig,
    final_loss: f64,
}

/// Parses and checks a `model.json` document.
pub fn parse_model_json(text: &str) -> Result<LogisticModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| ClassifierError::InvalidModel(e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(ClassifierError::InvalidModel(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    if file.num_classes == 0 || file.feature_dim == 0 {
        return Err(ClassifierError::InvalidModel("empty shape".into()));
    }
    let expected = file.num_classes.checked_mul(file.feature_dim);
    if expected != Some(file.weights.len()) || file.biases.len() != file.num_classes {
        return Err(ClassifierError::InvalidModel(format!(
            "{} weights and {} biases do not fit {} x {}",
            file.weights.len(),
            file.biases.len(),
            file.num_classes,
            file.feature_dim
        )));
    }
    if file
        .weights
        .iter()
        .chain(&file.biases)
        .any(|v| !v.is_finite())
    {
        return Err(ClassifierError::InvalidModel("non-finite parameter".into()));
    }
    Ok(LogisticModel {
        weights: file
            .weights
            .chunks(file.feature_dim)
            .map(<[f64]>::to_vec)
            .collect(),
        biases: file.biases,
        config: file.config,
        final_loss: file.final_loss,
    })
}

impl LogisticModel {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            feature_dim: self.feature_dim(),
            num_classes: self.num_classes(),
            weights: self.weights.iter().flatten().copied().collect(),
            biases: self.biases.clone(),
            config: self.config,
            final_loss: self.final_loss,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Result<Self>> {
        let text = fs::read_to_string(path)?;
        Ok(parse_model_json(&text))
    }
}

impl ConfidenceProvider for LogisticModel {
    fn name(&self) -> &str {
        "logistic"
    }

    fn num_classes(&self) -> usize {
        self.weights.len()
    }

    fn feature_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn confidences(&self, x: &[f64]) -> Vec<f64> {
        softmax(&logits(&self.weights, &self.biases, x))
    }
}
