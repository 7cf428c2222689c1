#![no_main]

use covcheck::classifier::{parse_model_json, ConfidenceProvider};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = parse_model_json(text) {
        let x = vec![0.5; model.feature_dim()];
        let conf = model.confidences(&x);
        assert_eq!(conf.len(), model.num_classes());
        assert_eq!(parse_model_json(&model.to_json()).ok(), Some(model));
    }
});
