#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(meta) = covcheck::featureset::parse_meta(text) {
            assert!(meta.num_classes >= 1 && meta.feature_dim >= 1);
        }
    }
});
