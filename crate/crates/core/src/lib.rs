//! Test-set coverage analysis for classifiers, done in a model's feature
//! space.
//!
//! - [`featureset`] reads and writes feature dumps.
//! - [`metrics`] computes equivalence partitioning, centroid positioning,
//!   boundary conditioning and its pairwise form.
//! - [`shift`] estimates per-class covariate shift with Gaussian mixtures.
//! - [`generator`] synthesizes centroid and boundary test points and runs the
//!   robustness sweep.
//! - [`report`] writes canonical report files.

pub mod classifier;
pub mod featureset;
pub mod generator;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod shift;
pub mod vecmath;
