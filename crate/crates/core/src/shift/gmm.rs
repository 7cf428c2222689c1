//! Diagonal-covariance Gaussian mixtures fitted by expectation-maximization.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Result, ShiftConfig, ShiftError};
use crate::rng;
use crate::vecmath::log_sum_exp;

pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GaussianMixture {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    fn component_log_densities(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for ((w, mu), var) in self.weights.iter().zip(&self.means).zip(&self.variances) {
            if *w <= 0.0 {
                out.push(f64::NEG_INFINITY);
                continue;
            }
            let mut acc = 0.0;
            for ((xi, m), v) in x.iter().zip(mu).zip(var) {
                let d = xi - m;
                acc += (2.0 * PI * v).ln() + d * d / v;
            }
            out.push(w.ln() - 0.5 * acc);
        }
    }

    /// `log Σ_j w_j N(x; μ_j, diag σ²_j)`, evaluated through log-sum-exp.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.k());
        self.component_log_densities(x, &mut buf);
        log_sum_exp(&buf)
    }

    /// Posterior component probabilities for `x`.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.k());
        self.component_log_densities(x, &mut buf);
        let lse = log_sum_exp(&buf);
        buf.iter().map(|l| (l - lse).exp()).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let total: f64 = self.weights.iter().sum();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut comp = self.k() - 1;
                for (j, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        comp = j;
                        break;
                    }
                }
                self.means[comp]
                    .iter()
                    .zip(&self.variances[comp])
                    .map(|(m, v)| {
                        let z: f64 = StandardNormal.sample(rng);
                        m + v.sqrt() * z
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn gmm_log_density(gmm: &GaussianMixture, x: &[f64]) -> f64 {
    gmm.log_density(x)
}

/// Deterministic draw of `n` points.
pub fn sample_gmm(gmm: &GaussianMixture, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, 0);
    gmm.sample(n, &mut r)
}

/// A fitted mixture with its EM trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub mixture: GaussianMixture,
    /// Total log-likelihood before each M-step, then at the returned
    /// parameters.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

impl GmmFit {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihoods.last().expect("at least one E-step")
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, the rest proportional to the
/// squared distance to the nearest chosen center.
fn seed_means<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let idx = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                acc += d;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[idx].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn global_variance(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len() as f64;
    let dim = points[0].len();
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for p in points {
        for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.into_iter()
        .map(|s| (s / n).max(VARIANCE_FLOOR))
        .collect()
}

/// E-step: fills `resp` (n × k) and returns the total log-likelihood.
fn expectation(gmm: &GaussianMixture, points: &[Vec<f64>], resp: &mut [Vec<f64>]) -> f64 {
    let mut buf = Vec::with_capacity(gmm.k());
    let mut total = 0.0;
    for (p, r) in points.iter().zip(resp.iter_mut()) {
        gmm.component_log_densities(p, &mut buf);
        let lse = log_sum_exp(&buf);
        total += lse;
        for (ri, l) in r.iter_mut().zip(&buf) {
            *ri = (l - lse).exp();
        }
    }
    total
}

/// M-step. A component that captured no mass keeps its previous mean and
/// variance with weight zero.
fn maximization(gmm: &mut GaussianMixture, points: &[Vec<f64>], resp: &[Vec<f64>]) {
    let n = points.len() as f64;
    let dim = gmm.dim();
    for j in 0..gmm.k() {
        let nk: f64 = resp.iter().map(|r| r[j]).sum();
        gmm.weights[j] = nk / n;
        if nk <= f64::MIN_POSITIVE {
            gmm.weights[j] = 0.0;
            continue;
        }
        let mut mean = vec![0.0; dim];
        for (p, r) in points.iter().zip(resp) {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += r[j] * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk);
        let mut var = vec![0.0; dim];
        for (p, r) in points.iter().zip(resp) {
            for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
                *s += r[j] * (v - m) * (v - m);
            }
        }
        gmm.means[j] = mean;
        gmm.variances[j] = var
            .into_iter()
            .map(|s| (s / nk).max(VARIANCE_FLOOR))
            .collect();
    }
    let total: f64 = gmm.weights.iter().sum();
    gmm.weights.iter_mut().for_each(|w| *w /= total);
}

/// Fits a diagonal GMM with `min(cfg.components, n)` components.
///
/// Stops after `cfg.max_iters` M-steps or once the relative log-likelihood
/// improvement drops below `cfg.tol`.
pub fn fit_gmm(points: &[Vec<f64>], cfg: &ShiftConfig) -> Result<GmmFit> {
    fit_gmm_seeded(points, cfg, cfg.seed)
}

pub fn fit_gmm_seeded(points: &[Vec<f64>], cfg: &ShiftConfig, seed: u64) -> Result<GmmFit> {
    if points.is_empty() {
        return Err(ShiftError::EmptyInput);
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ShiftError::DimensionMismatch(
            "points have differing lengths".into(),
        ));
    }
    let k = cfg.components.max(1).min(points.len());
    let mut r = rng::stream(seed, 1);
    let var0 = global_variance(points);
    let mut gmm = GaussianMixture {
        weights: vec![1.0 / k as f64; k],
        means: seed_means(points, k, &mut r),
        variances: vec![var0; k],
    };

    let mut resp = vec![vec![0.0; k]; points.len()];
    let mut lls: Vec<f64> = Vec::new();
    let mut converged = false;
    for iter in 0..=cfg.max_iters {
        let ll = expectation(&gmm, points, &mut resp);
        if let Some(&prev) = lls.last() {
            if ll - prev <= cfg.tol * prev.abs() {
                lls.push(ll);
                converged = true;
                break;
            }
        }
        lls.push(ll);
        if iter == cfg.max_iters {
            break;
        }
        maximization(&mut gmm, points, &resp);
    }
    Ok(GmmFit {
        mixture: gmm,
        log_likelihoods: lls,
        converged,
    })
}
