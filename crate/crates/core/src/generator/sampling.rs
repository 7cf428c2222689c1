use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{GeneratedSample, GenerationConfig, GenerationError, Region, Result};
use crate::classifier::ConfidenceProvider;
use crate::featureset::FeatureDataset;
use crate::metrics::{pair_partner, top1, CentroidModel, MetricConfig};
use crate::vecmath::{argmax, margin};

pub const BISECTION_STEPS: usize = 30;

/// Share of a class returned when no sample falls in the seed band.
const FALLBACK_FRACTION: f64 = 0.10;

/// Boundary seeds for one class, as indices into the test set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSeeds {
    pub indices: Vec<usize>,
    pub ids: Vec<String>,
    /// True when no sample fell in `[wc_l, theta2]` and the lowest-margin
    /// samples were used instead.
    pub fallback: bool,
}

/// Per class, samples whose top-1 confidence lies in `[wc_l, theta2]`,
/// sorted by ascending margin (top-1 minus top-2).
pub fn select_boundary_seeds(
    test: &FeatureDataset,
    cfg: &GenerationConfig,
    metric: &MetricConfig,
) -> Result<Vec<ClassSeeds>> {
    let mut by_class: Vec<Vec<(usize, f64, bool)>> = vec![Vec::new(); test.num_classes];
    for (i, s) in test.samples.iter().enumerate() {
        let conf = s
            .confidence
            .as_deref()
            .ok_or_else(|| GenerationError::MissingConfidences(s.id.clone()))?;
        let top = top1(conf);
        let weak = cfg.wc_l <= top && top <= metric.theta2;
        by_class[s.label].push((i, margin(conf), weak));
    }
    Ok(by_class
        .into_iter()
        .map(|mut members| {
            members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let weak: Vec<usize> = members.iter().filter(|m| m.2).map(|m| m.0).collect();
            let (indices, fallback) = if weak.is_empty() {
                let take = ((members.len() as f64 * FALLBACK_FRACTION).ceil() as usize)
                    .clamp(1.min(members.len()), members.len());
                (members.iter().take(take).map(|m| m.0).collect(), true)
            } else {
                (weak, false)
            };
            ClassSeeds {
                ids: indices
                    .iter()
                    .map(|&i| test.samples[i].id.clone())
                    .collect(),
                indices,
                fallback,
            }
        })
        .collect())
}

fn jitter<R: Rng + ?Sized>(x: &[f64], scale: f64, rng: &mut R) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + scale * z
        })
        .collect()
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - t) * x + t * y)
        .collect()
}

/// Moves `seed` towards the centroid of its pair class (the most probable
/// class other than its label) until the provider predicts the pair class
/// with top-1 confidence in `[theta1, theta2]`.
///
/// The segment position is found by bisection: points still predicted as
/// the pair class above `theta2` are too deep and shrink the upper end,
/// anything else moves the lower end up. The candidate is then jittered by
/// `sigma_boundary · R_label` and re-checked; if no jittered point passes
/// within `max_rejection_iters` draws the bare candidate is returned with
/// `verified = false`.
pub fn generate_boundary_sample<R: Rng + ?Sized>(
    seed: &crate::featureset::Sample,
    cm: &CentroidModel,
    provider: &dyn ConfidenceProvider,
    cfg: &GenerationConfig,
    metric: &MetricConfig,
    rng: &mut R,
) -> Result<GeneratedSample> {
    let conf = seed
        .confidence
        .as_deref()
        .ok_or_else(|| GenerationError::MissingConfidences(seed.id.clone()))?;
    let label = seed.label;
    let pair = pair_partner(conf, label).ok_or_else(|| {
        GenerationError::DimensionMismatch("boundary samples need two classes".into())
    })?;
    let target = &cm.centroids[pair];
    let hits = |p: &[f64]| argmax(p) == pair && metric.in_boundary_band(top1(p));

    let mut t = 0.0;
    if !hits(&provider.confidences(&seed.features)) {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            t = 0.5 * (lo + hi);
            let p = provider.confidences(&lerp(&seed.features, target, t));
            if hits(&p) {
                break;
            }
            if argmax(&p) == pair && top1(&p) > metric.theta2 {
                hi = t;
            } else {
                lo = t;
            }
        }
    }
    let candidate = lerp(&seed.features, target, t);
    let scale = cfg.sigma_boundary * cm.radii[label];
    let mut features = candidate.clone();
    let mut verified = false;
    for _ in 0..cfg.max_rejection_iters {
        let x = jitter(&candidate, scale, rng);
        if hits(&provider.confidences(&x)) {
            features = x;
            verified = true;
            break;
        }
    }
    Ok(GeneratedSample {
        features,
        oracle_label: label,
        region: Region::Boundary,
        seed_id: seed.id.clone(),
        pair_class: Some(pair),
        t,
        verified,
    })
}

/// Jitters the class centroid by `sigma_centroid · R_i` until the point is
/// inside the centroid region and predicted as class `i`. The jitter scale
/// halves every 10 rejections; after `max_rejection_iters` the centroid
/// itself is returned.
pub fn generate_centroid_sample<R: Rng + ?Sized>(
    class: usize,
    cm: &CentroidModel,
    provider: &dyn ConfidenceProvider,
    cfg: &GenerationConfig,
    metric: &MetricConfig,
    rng: &mut R,
) -> GeneratedSample {
    let centroid = &cm.centroids[class];
    let accept =
        |x: &[f64]| cm.normalized_distance(x, class) <= metric.r && provider.predict(x) == class;
    let mut scale = cfg.sigma_centroid * cm.radii[class];
    let mut found = None;
    for attempt in 0..cfg.max_rejection_iters {
        if attempt > 0 && attempt % 10 == 0 {
            scale *= 0.5;
        }
        let x = jitter(centroid, scale, rng);
        if accept(&x) {
            found = Some(x);
            break;
        }
    }
    let (features, verified) = match found {
        Some(x) => (x, true),
        None => (centroid.clone(), accept(centroid)),
    };
    GeneratedSample {
        features,
        oracle_label: class,
        region: Region::Centroid,
        seed_id: format!("centroid-{class}"),
        pair_class: None,
        t: 0.0,
        verified,
    }
}
