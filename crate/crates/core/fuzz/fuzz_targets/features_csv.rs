#![no_main]

use covcheck::featureset::{parse_features, Meta};
use libfuzzer_sys::fuzz_target;

// The first byte picks the shape, the rest is the CSV body.
fuzz_target!(|data: &[u8]| {
    let Some((&shape, body)) = data.split_first() else {
        return;
    };
    let meta = Meta {
        name: "fuzz".into(),
        num_classes: usize::from(shape % 4) + 1,
        feature_dim: usize::from(shape / 4 % 4) + 1,
        class_names: None,
    };
    if let Ok(samples) = parse_features(&meta, body) {
        for s in samples {
            assert!(s.label < meta.num_classes);
            assert_eq!(s.features.len(), meta.feature_dim);
            assert!(s.features.iter().all(|v| v.is_finite()));
        }
    }
});
