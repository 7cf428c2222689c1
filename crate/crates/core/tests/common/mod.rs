//! Independent reference implementations used as test oracles. They favour
//! plain loops over reuse of library helpers.
#![allow(dead_code, clippy::needless_range_loop)]

use covcheck::featureset::{FeatureDataset, Sample};
use covcheck::metrics::MetricConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct BruteMetrics {
    pub ep: Vec<f64>,
    pub cp: Vec<Option<f64>>,
    pub bc: Vec<Option<f64>>,
    pub pbc: Vec<Vec<f64>>,
}

/// Linear-interpolation percentile written out from its definition: the
/// value at fractional rank `p · (n - 1)` of the sorted sample.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= v.len() || h == lo as f64 {
        return v[lo];
    }
    v[lo] + (v[lo + 1] - v[lo]) * (h - lo as f64)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// Direct counting over every sample for each class and pair.
pub fn brute_metrics(
    train: &FeatureDataset,
    test: &FeatureDataset,
    cfg: &MetricConfig,
) -> BruteMetrics {
    let nc = test.num_classes;
    let d = test.feature_dim;
    let mut ep = Vec::new();
    let mut cp = Vec::new();
    let mut bc = Vec::new();
    for c in 0..nc {
        let members: Vec<&Sample> = test.samples.iter().filter(|s| s.label == c).collect();
        ep.push((members.len() * nc) as f64 / test.samples.len() as f64);

        let tr: Vec<&Sample> = train.samples.iter().filter(|s| s.label == c).collect();
        let mut centroid = vec![0.0; d];
        for s in &tr {
            for k in 0..d {
                centroid[k] += s.features[k];
            }
        }
        for v in centroid.iter_mut() {
            *v /= tr.len() as f64;
        }
        let dists: Vec<f64> = tr.iter().map(|s| dist(&s.features, &centroid)).collect();
        let mut radius = percentile(&dists, 0.95);
        if radius <= 0.0 {
            radius = 1.0;
        }
        if members.is_empty() {
            cp.push(None);
            bc.push(None);
            continue;
        }
        let inside = members
            .iter()
            .filter(|s| dist(&s.features, &centroid) / radius <= cfg.r)
            .count();
        cp.push(Some(inside as f64 / members.len() as f64));
        let weak = members
            .iter()
            .filter(|s| {
                let top = s
                    .confidence
                    .as_ref()
                    .unwrap()
                    .iter()
                    .cloned()
                    .fold(f64::MIN, f64::max);
                top >= cfg.theta1 && top <= cfg.theta2
            })
            .count();
        bc.push(Some(weak as f64 / members.len() as f64));
    }

    let mut pbc = vec![vec![0.0; nc]; nc];
    for i in 0..nc {
        for j in 0..nc {
            if i == j {
                continue;
            }
            let mut hits = 0usize;
            let mut n = 0usize;
            for s in &test.samples {
                if s.label != i && s.label != j {
                    continue;
                }
                n += 1;
                let other = if s.label == i { j } else { i };
                let conf = s.confidence.as_ref().unwrap();
                let top = conf.iter().cloned().fold(f64::MIN, f64::max);
                if !(top >= cfg.theta1 && top <= cfg.theta2) {
                    continue;
                }
                // Partner: highest confidence among classes other than the
                // label, lowest index on ties.
                let mut best: Option<usize> = None;
                for k in 0..nc {
                    if k == s.label {
                        continue;
                    }
                    if best.is_none_or(|b| conf[k] > conf[b]) {
                        best = Some(k);
                    }
                }
                if best == Some(other) {
                    hits += 1;
                }
            }
            if n > 0 {
                pbc[i][j] = hits as f64 / n as f64;
            }
        }
    }
    BruteMetrics { ep, cp, bc, pbc }
}

/// Random softmax-like confidence vector.
pub fn random_confidence(rng: &mut ChaCha8Rng, nc: usize) -> Vec<f64> {
    let logits: Vec<f64> = (0..nc).map(|_| rng.random_range(-3.0..3.0)).collect();
    let m = logits.iter().cloned().fold(f64::MIN, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// A small random dataset in which every class appears at least once.
pub fn random_dataset(seed: u64, nc: usize, dim: usize, n: usize, name: &str) -> FeatureDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = FeatureDataset::new(name, nc, dim);
    for k in 0..n.max(nc) {
        let label = if k < nc { k } else { rng.random_range(0..nc) };
        let x: Vec<f64> = (0..dim)
            .map(|a| rng.random_range(-2.0..2.0) + if a == label % dim { 3.0 } else { 0.0 })
            .collect();
        let conf = random_confidence(&mut rng, nc);
        ds.samples
            .push(Sample::new(format!("{name}-{k}"), label, x).with_confidence(conf));
    }
    ds
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

pub fn normal_pdf(x: f64, mu: f64, var: f64) -> f64 {
    (-(x - mu) * (x - mu) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Jensen-Shannon divergence in bits between two 1-D Gaussian mixtures
/// `(weights, means, variances)`, by quadrature.
pub fn js_quadrature(p: (&[f64], &[f64], &[f64]), q: (&[f64], &[f64], &[f64])) -> f64 {
    let dens = |m: (&[f64], &[f64], &[f64]), x: f64| -> f64 {
        (0..m.0.len())
            .map(|k| m.0[k] * normal_pdf(x, m.1[k], m.2[k]))
            .sum()
    };
    let lo = p.1.iter().chain(q.1).cloned().fold(f64::MAX, f64::min)
        - 12.0 * p.2.iter().chain(q.2).cloned().fold(0.0, f64::max).sqrt();
    let hi = p.1.iter().chain(q.1).cloned().fold(f64::MIN, f64::max)
        + 12.0 * p.2.iter().chain(q.2).cloned().fold(0.0, f64::max).sqrt();
    let term = |a: f64, m: f64| if a > 0.0 { a * (a / m).log2() } else { 0.0 };
    simpson(
        |x| {
            let a = dens(p, x);
            let b = dens(q, x);
            let m = 0.5 * (a + b);
            if m <= 0.0 {
                0.0
            } else {
                0.5 * term(a, m) + 0.5 * term(b, m)
            }
        },
        lo,
        hi,
        200_000,
    )
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}
