#![no_main]

use covcheck::generator::{parse_provenance, Region};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_provenance(data) {
        for r in rows {
            assert!((0.0..=1.0).contains(&r.t));
            assert_eq!(r.region == Region::Boundary, r.pair_class.is_some());
        }
    }
});
