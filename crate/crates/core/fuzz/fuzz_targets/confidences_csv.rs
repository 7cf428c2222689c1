#![no_main]

use covcheck::featureset::{parse_confidences, Meta};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&shape, body)) = data.split_first() else {
        return;
    };
    let meta = Meta {
        name: "fuzz".into(),
        num_classes: usize::from(shape % 4) + 1,
        feature_dim: 1,
        class_names: None,
    };
    if let Ok(rows) = parse_confidences(&meta, body) {
        for (_, conf) in rows {
            assert_eq!(conf.len(), meta.num_classes);
            assert!((conf.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }
});
