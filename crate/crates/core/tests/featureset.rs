mod common;

use covcheck::featureset::{load_dataset, stats, validate, write_dataset, FeatureDataset, Sample};
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = FeatureDataset> {
    (1usize..5, 1usize..4, 0usize..30, any::<bool>()).prop_flat_map(|(nc, dim, n, conf)| {
        let row = (
            0..nc,
            prop::collection::vec(-1e6f64..1e6, dim),
            prop::collection::vec(0.01f64..1.0, nc),
        );
        prop::collection::vec(row, n).prop_map(move |rows| {
            let mut ds = FeatureDataset::new("random", nc, dim);
            for (k, (label, x, w)) in rows.into_iter().enumerate() {
                let mut s = Sample::new(format!("s{k}"), label, x);
                if conf {
                    let total: f64 = w.iter().sum();
                    s = s.with_confidence(w.iter().map(|v| v / total).collect());
                }
                ds.samples.push(s);
            }
            ds
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_load_round_trips(ds in dataset_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert!(validate(&back).is_empty());
    }

    #[test]
    fn stats_total_matches_sample_count(ds in dataset_strategy()) {
        let st = stats(&ds);
        prop_assert_eq!(st.total, ds.samples.len());
        prop_assert_eq!(st.per_class_counts.iter().sum::<usize>(), ds.samples.len());
    }
}
