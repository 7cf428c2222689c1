#![no_main]

use covcheck::report::{parse_report, report_to_string};
use libfuzzer_sys::fuzz_target;

// Any report that parses must re-emit canonically and parse back unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = parse_report(text) {
        if let Ok(canonical) = report_to_string(&report) {
            assert_eq!(parse_report(&canonical).unwrap(), report);
        }
    }
});
