//! Replays the checked-in fuzz corpus through the same parsers the fuzz
//! targets drive, so the seeds stay valid inputs as formats evolve.

use std::fs;
use std::path::PathBuf;

use covcheck::classifier::parse_model_json;
use covcheck::featureset::{parse_confidences, parse_features, parse_meta, Meta};
use covcheck::generator::parse_provenance;
use covcheck::report::{parse_report, report_to_string};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

fn shaped(shape: u8, classes_only: bool) -> Meta {
    Meta {
        name: "fuzz".into(),
        num_classes: usize::from(shape % 4) + 1,
        feature_dim: if classes_only {
            1
        } else {
            usize::from(shape / 4 % 4) + 1
        },
        class_names: None,
    }
}

#[test]
fn meta_seeds_parse() {
    for (p, b) in seeds("meta_json") {
        parse_meta(std::str::from_utf8(&b).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn feature_and_confidence_seeds_parse() {
    for (p, b) in seeds("features_csv") {
        parse_features(&shaped(b[0], false), &b[1..])
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("confidences_csv") {
        parse_confidences(&shaped(b[0], true), &b[1..])
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn provenance_and_model_seeds_parse() {
    for (p, b) in seeds("provenance_csv") {
        parse_provenance(&b).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("model_json") {
        let model = parse_model_json(std::str::from_utf8(&b).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(parse_model_json(&model.to_json()).unwrap(), model);
    }
}

#[test]
fn report_seeds_are_canonical() {
    for (p, b) in seeds("report_json") {
        let text = std::str::from_utf8(&b).unwrap();
        let report = parse_report(text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(report_to_string(&report).unwrap(), text, "{}", p.display());
    }
}
