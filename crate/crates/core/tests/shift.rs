mod common;

use covcheck::classifier::{make_blobs, BlobSpec};
use covcheck::shift::{
    covariate_shift, fit_gmm, gmm_log_density, js_divergence, GaussianMixture, ShiftConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{js_quadrature, simpson};

#[test]
fn two_clusters_recover_weights_and_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pts = Vec::new();
    for &cx in &[-10.0, 10.0] {
        for _ in 0..200 {
            pts.push(vec![
                cx + rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
            ]);
        }
    }
    let fit = fit_gmm(
        &pts,
        &ShiftConfig {
            components: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let g = &fit.mixture;
    for j in 0..2 {
        assert!(
            (g.weights[j] - 0.5).abs() <= 0.02,
            "weights {:?}",
            g.weights
        );
        let left = g.means[j][0] < 0.0;
        let cluster: Vec<&Vec<f64>> = pts.iter().filter(|p| (p[0] < 0.0) == left).collect();
        // Oracle: direct per-cluster sample mean.
        for a in 0..2 {
            let m = cluster.iter().map(|p| p[a]).sum::<f64>() / cluster.len() as f64;
            assert!((g.means[j][a] - m).abs() < 1e-6);
        }
        let truth = if left { -10.0 } else { 10.0 };
        assert!((g.means[j][0] - truth).abs() <= 0.2);
        assert!(g.means[j][1].abs() <= 0.2);
    }
}

fn blob_split(
    shift: f64,
) -> (
    covcheck::featureset::FeatureDataset,
    covcheck::featureset::FeatureDataset,
) {
    let spec = BlobSpec {
        centers: vec![vec![0.0, 0.0], vec![8.0, 0.0]],
        sigmas: vec![1.0, 1.0],
        train_per_class: 600,
        test_per_class: 600,
        seed: 8,
    };
    let (train, _) = make_blobs(&spec).unwrap();
    let mut test = train.clone();
    for s in &mut test.samples {
        s.features.iter_mut().for_each(|v| *v += shift);
    }
    (train, test)
}

#[test]
fn identical_splits_have_small_divergence() {
    let (train, test) = blob_split(0.0);
    let rep = covariate_shift(&train, &test, &ShiftConfig::default()).unwrap();
    assert!(
        rep.per_class_js.iter().all(|v| v.unwrap() <= 0.05),
        "{:?}",
        rep.per_class_js
    );
    assert_eq!(rep.config.components, 10);
}

#[test]
fn shift_of_five_sigma_in_every_dimension_is_large() {
    let (train, test) = blob_split(5.0);
    let rep = covariate_shift(&train, &test, &ShiftConfig::default()).unwrap();
    assert!(
        rep.per_class_js.iter().all(|v| v.unwrap() >= 0.8),
        "{:?}",
        rep.per_class_js
    );
}

#[test]
fn report_is_identical_across_thread_counts() {
    let (train, test) = blob_split(1.0);
    let cfg = ShiftConfig {
        mc_samples: 3000,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| covariate_shift(&train, &test, &cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, covariate_shift(&train, &test, &cfg).unwrap());
}

fn mixture_1d() -> impl Strategy<Value = GaussianMixture> {
    prop::collection::vec((0.1f64..1.0, -5.0f64..5.0, 0.05f64..4.0), 1..4).prop_map(|c| {
        let total: f64 = c.iter().map(|t| t.0).sum();
        GaussianMixture {
            weights: c.iter().map(|t| t.0 / total).collect(),
            means: c.iter().map(|t| vec![t.1]).collect(),
            variances: c.iter().map(|t| vec![t.2]).collect(),
        }
    })
}

fn parts(g: &GaussianMixture) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        g.weights.clone(),
        g.means.iter().map(|m| m[0]).collect(),
        g.variances.iter().map(|v| v[0]).collect(),
    )
}

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..4)
        .prop_flat_map(|d| prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), 5..80))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_integrates_to_one(g in mixture_1d()) {
        let sd = g.variances.iter().map(|v| v[0].sqrt()).fold(0.0, f64::max);
        let lo = g.means.iter().map(|m| m[0]).fold(f64::MAX, f64::min) - 12.0 * sd;
        let hi = g.means.iter().map(|m| m[0]).fold(f64::MIN, f64::max) + 12.0 * sd;
        let total = simpson(|x| gmm_log_density(&g, &[x]).exp(), lo, hi, 20_000);
        prop_assert!((total - 1.0).abs() <= 1e-4, "integral {}", total);
    }

    #[test]
    fn em_log_likelihood_never_decreases(pts in points(), k in 1usize..5, seed in any::<u64>()) {
        let fit = fit_gmm(&pts, &ShiftConfig { components: k, seed, ..Default::default() }).unwrap();
        for w in fit.log_likelihoods.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
        for p in &pts {
            let r: f64 = fit.mixture.responsibilities(p).iter().sum();
            prop_assert!((r - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn js_is_bounded_and_zero_on_identity(p in mixture_1d(), q in mixture_1d(), seed in any::<u64>()) {
        let cfg = ShiftConfig { mc_samples: 2000, seed, ..Default::default() };
        let est = js_divergence(&p, &q, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&est.value));
        prop_assert_eq!(js_divergence(&p, &p, &cfg).unwrap().value, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn js_estimate_agrees_with_quadrature(p in mixture_1d(), q in mixture_1d(), seed in any::<u64>()) {
        let cfg = ShiftConfig { seed, ..Default::default() };
        let est = js_divergence(&p, &q, &cfg).unwrap();
        let (pw, pm, pv) = parts(&p);
        let (qw, qm, qv) = parts(&q);
        let exact = js_quadrature((&pw, &pm, &pv), (&qw, &qm, &qv));
        prop_assert!(
            (est.value - exact).abs() <= 5.0 * est.standard_error + 1e-3,
            "estimate {} +- {} vs quadrature {}", est.value, est.standard_error, exact
        );
    }
}
