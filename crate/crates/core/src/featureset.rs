//! Feature-dump data model and its on-disk format.
//!
//! A dump directory holds three files:
//!
//! - `meta.json`: `name`, `num_classes`, `feature_dim` and optional `class_names`
//! - `features.csv`: header `id,label,f0,...,f{D-1}`, one row per sample
//! - `confidences.csv` (optional): header `id,c0,...,c{NC-1}`, joined by id
//!
//! The parsers work on in-memory text so they can be exercised without a
//! filesystem; [`load_dataset`] is a thin wrapper that reads the files.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const META_FILE: &str = "meta.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const CONFIDENCES_FILE: &str = "confidences.csv";

/// Tolerance on the sum of a confidence vector.
pub const CONFIDENCE_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FeatureSetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("schema error in {file}: {reason}")]
    Schema { file: String, reason: String },
    #[error("sample {id}: label {label} out of range for {num_classes} classes")]
    LabelOutOfRange {
        id: String,
        label: i64,
        num_classes: usize,
    },
    #[error("sample {id}: non-finite value in column {column}")]
    NonFiniteValue { id: String, column: String },
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
    #[error("sample {id}: confidences sum to {sum}, expected 1")]
    ConfidenceNotNormalized { id: String, sum: f64 },
    #[error("sample {id}: confidence {value} outside [0, 1]")]
    ConfidenceOutOfRange { id: String, value: f64 },
}

impl FeatureSetError {
    fn schema(file: &str, reason: impl Into<String>) -> Self {
        FeatureSetError::Schema {
            file: file.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures to reach the data, as opposed to malformed data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            FeatureSetError::MissingFile(_) | FeatureSetError::Io { .. }
        )
    }
}

pub type Result<T, E = FeatureSetError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub label: usize,
    pub features: Vec<f64>,
    pub confidence: Option<Vec<f64>>,
}

impl Sample {
    pub fn new(id: impl Into<String>, label: usize, features: Vec<f64>) -> Self {
        Sample {
            id: id.into(),
            label,
            features,
            confidence: None,
        }
    }

    pub fn with_confidence(mut self, confidence: Vec<f64>) -> Self {
        self.confidence = Some(confidence);
        self
    }
}

/// Labeled feature vectors from one model layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    pub name: String,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub samples: Vec<Sample>,
    pub class_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub per_class_counts: Vec<usize>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    LabelOutOfRange { label: usize },
    WrongDimension { expected: usize, found: usize },
    NonFiniteValue { column: usize },
    DuplicateId,
    ConfidenceWrongLength { expected: usize, found: usize },
    ConfidenceOutOfRange { value: f64 },
    ConfidenceNotNormalized { sum: f64 },
    ClassNamesLength { expected: usize, found: usize },
    EmptyShape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// `None` for dataset-level problems.
    pub sample_id: Option<String>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.sample_id {
            Some(id) => write!(f, "sample {id}: ")?,
            None => write!(f, "dataset: ")?,
        }
        match &self.kind {
            ViolationKind::LabelOutOfRange { label } => write!(f, "label {label} out of range"),
            ViolationKind::WrongDimension { expected, found } => {
                write!(f, "expected {expected} features, found {found}")
            }
            ViolationKind::NonFiniteValue { column } => {
                write!(f, "non-finite feature in column f{column}")
            }
            ViolationKind::DuplicateId => write!(f, "duplicate id"),
            ViolationKind::ConfidenceWrongLength { expected, found } => {
                write!(f, "expected {expected} confidences, found {found}")
            }
            ViolationKind::ConfidenceOutOfRange { value } => {
                write!(f, "confidence {value} outside [0, 1]")
            }
            ViolationKind::ConfidenceNotNormalized { sum } => {
                write!(f, "confidences sum to {sum}")
            }
            ViolationKind::ClassNamesLength { expected, found } => {
                write!(f, "expected {expected} class names, found {found}")
            }
            ViolationKind::EmptyShape => write!(f, "num_classes and feature_dim must be positive"),
        }
    }
}

impl FeatureDataset {
    pub fn new(name: impl Into<String>, num_classes: usize, feature_dim: usize) -> Self {
        FeatureDataset {
            name: name.into(),
            num_classes,
            feature_dim,
            samples: Vec::new(),
            class_names: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_confidences(&self) -> bool {
        self.samples.iter().all(|s| s.confidence.is_some())
    }

    /// Samples of one class, in dataset order.
    pub fn class_samples(&self, class: usize) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.label == class)
    }

    pub fn meta(&self) -> Meta {
        Meta {
            name: self.name.clone(),
            num_classes: self.num_classes,
            feature_dim: self.feature_dim,
            class_names: self.class_names.clone(),
        }
    }
}

/// Every invariant violation in `dataset`. Empty when the dataset is valid.
pub fn validate(dataset: &FeatureDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let nc = dataset.num_classes;
    let dim = dataset.feature_dim;
    if nc == 0 || dim == 0 {
        out.push(Violation {
            sample_id: None,
            kind: ViolationKind::EmptyShape,
        });
    }
    if let Some(names) = &dataset.class_names {
        if names.len() != nc {
            out.push(Violation {
                sample_id: None,
                kind: ViolationKind::ClassNamesLength {
                    expected: nc,
                    found: names.len(),
                },
            });
        }
    }

    let mut seen = HashSet::new();
    for s in &dataset.samples {
        let mut push = |kind| {
            out.push(Violation {
                sample_id: Some(s.id.clone()),
                kind,
            })
        };
        if !seen.insert(s.id.as_str()) {
            push(ViolationKind::DuplicateId);
        }
        if s.label >= nc {
            push(ViolationKind::LabelOutOfRange { label: s.label });
        }
        if s.features.len() != dim {
            push(ViolationKind::WrongDimension {
                expected: dim,
                found: s.features.len(),
            });
        }
        if let Some(column) = s.features.iter().position(|v| !v.is_finite()) {
            push(ViolationKind::NonFiniteValue { column });
        }
        if let Some(conf) = &s.confidence {
            if conf.len() != nc {
                push(ViolationKind::ConfidenceWrongLength {
                    expected: nc,
                    found: conf.len(),
                });
            } else if let Some(&value) = conf.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                push(ViolationKind::ConfidenceOutOfRange { value });
            } else {
                let sum: f64 = conf.iter().sum();
                if (sum - 1.0).abs() > CONFIDENCE_SUM_TOL {
                    push(ViolationKind::ConfidenceNotNormalized { sum });
                }
            }
        }
    }
    out
}

/// Per-class sample counts. Labels outside `[0, nc)` are ignored, so call
/// this on validated data.
pub fn stats(dataset: &FeatureDataset) -> DatasetStats {
    let mut per_class_counts = vec![0usize; dataset.num_classes];
    for s in &dataset.samples {
        if let Some(c) = per_class_counts.get_mut(s.label) {
            *c += 1;
        }
    }
    DatasetStats {
        total: per_class_counts.iter().sum(),
        per_class_counts,
    }
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub num_classes: usize,
    pub feature_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
}

pub fn parse_meta(text: &str) -> Result<Meta> {
    let meta: Meta = serde_json::from_str(text)
        .map_err(|e| FeatureSetError::schema(META_FILE, e.to_string()))?;
    if meta.num_classes == 0 {
        return Err(FeatureSetError::schema(
            META_FILE,
            "num_classes must be positive",
        ));
    }
    if meta.feature_dim == 0 {
        return Err(FeatureSetError::schema(
            META_FILE,
            "feature_dim must be positive",
        ));
    }
    if let Some(names) = &meta.class_names {
        if names.len() != meta.num_classes {
            return Err(FeatureSetError::schema(
                META_FILE,
                format!(
                    "class_names has {} entries, num_classes is {}",
                    names.len(),
                    meta.num_classes
                ),
            ));
        }
    }
    Ok(meta)
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes)
}

fn check_header(file: &str, record: &csv::StringRecord, expected: &[String]) -> Result<()> {
    if record.len() != expected.len() || record.iter().zip(expected).any(|(a, b)| a != b) {
        let found: Vec<&str> = record.iter().collect();
        return Err(FeatureSetError::schema(
            file,
            format!(
                "header `{}`, expected `{}`",
                found.join(","),
                expected.join(",")
            ),
        ));
    }
    Ok(())
}

fn parse_real(file: &str, id: &str, column: &str, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| {
        FeatureSetError::schema(
            file,
            format!("row {id}: `{field}` in {column} is not a number"),
        )
    })?;
    if !v.is_finite() {
        return Err(FeatureSetError::NonFiniteValue {
            id: id.to_string(),
            column: column.to_string(),
        });
    }
    Ok(v)
}

fn read_records(file: &str, bytes: &[u8], header: &[String]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv_reader(bytes);
    let mut records = reader.records();
    let first = records
        .next()
        .ok_or_else(|| FeatureSetError::schema(file, "missing header"))?
        .map_err(|e| FeatureSetError::schema(file, e.to_string()))?;
    check_header(file, &first, header)?;
    let mut out = Vec::new();
    for (row, rec) in records.enumerate() {
        let rec = rec.map_err(|e| FeatureSetError::schema(file, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(FeatureSetError::schema(
                file,
                format!(
                    "row {}: {} columns, expected {}",
                    row + 1,
                    rec.len(),
                    header.len()
                ),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn features_header(feature_dim: usize) -> Vec<String> {
    let mut h = vec!["id".to_string(), "label".to_string()];
    h.extend((0..feature_dim).map(|i| format!("f{i}")));
    h
}

pub fn confidences_header(num_classes: usize) -> Vec<String> {
    let mut h = vec!["id".to_string()];
    h.extend((0..num_classes).map(|i| format!("c{i}")));
    h
}

/// Parses `features.csv`. Sample order follows row order.
pub fn parse_features(meta: &Meta, bytes: &[u8]) -> Result<Vec<Sample>> {
    let header = features_header(meta.feature_dim);
    let records = read_records(FEATURES_FILE, bytes, &header)?;
    let mut seen = HashSet::with_capacity(records.len());
    let mut samples = Vec::with_capacity(records.len());
    for rec in &records {
        let id = &rec[0];
        if !seen.insert(id.to_string()) {
            return Err(FeatureSetError::DuplicateId(id.to_string()));
        }
        let raw_label: i64 = rec[1].parse().map_err(|_| {
            FeatureSetError::schema(
                FEATURES_FILE,
                format!("row {id}: label `{}` is not an integer", &rec[1]),
            )
        })?;
        if raw_label < 0 || raw_label as u64 >= meta.num_classes as u64 {
            return Err(FeatureSetError::LabelOutOfRange {
                id: id.to_string(),
                label: raw_label,
                num_classes: meta.num_classes,
            });
        }
        let features = rec
            .iter()
            .skip(2)
            .zip(&header[2..])
            .map(|(field, col)| parse_real(FEATURES_FILE, id, col, field))
            .collect::<Result<Vec<_>>>()?;
        samples.push(Sample::new(id, raw_label as usize, features));
    }
    Ok(samples)
}

/// Parses `confidences.csv` into `(id, vector)` pairs, validating each row.
pub fn parse_confidences(meta: &Meta, bytes: &[u8]) -> Result<Vec<(String, Vec<f64>)>> {
    let header = confidences_header(meta.num_classes);
    let records = read_records(CONFIDENCES_FILE, bytes, &header)?;
    let mut seen = HashSet::with_capacity(records.len());
    let mut out = Vec::with_capacity(records.len());
    for rec in &records {
        let id = &rec[0];
        if !seen.insert(id.to_string()) {
            return Err(FeatureSetError::DuplicateId(id.to_string()));
        }
        let conf = rec
            .iter()
            .skip(1)
            .zip(&header[1..])
            .map(|(field, col)| parse_real(CONFIDENCES_FILE, id, col, field))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&value) = conf.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FeatureSetError::ConfidenceOutOfRange {
                id: id.to_string(),
                value,
            });
        }
        let sum: f64 = conf.iter().sum();
        if (sum - 1.0).abs() > CONFIDENCE_SUM_TOL {
            return Err(FeatureSetError::ConfidenceNotNormalized {
                id: id.to_string(),
                sum,
            });
        }
        out.push((id.to_string(), conf));
    }
    Ok(out)
}

/// Joins parsed parts into a dataset. Confidence ids must all name a sample;
/// samples without a confidence row keep `confidence: None`.
pub fn assemble(
    meta: Meta,
    mut samples: Vec<Sample>,
    confidences: Option<Vec<(String, Vec<f64>)>>,
) -> Result<FeatureDataset> {
    if let Some(rows) = confidences {
        let index: HashMap<String, usize> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        for (id, conf) in rows {
            let Some(&i) = index.get(&id) else {
                return Err(FeatureSetError::schema(
                    CONFIDENCES_FILE,
                    format!("id {id} does not appear in {FEATURES_FILE}"),
                ));
            };
            samples[i].confidence = Some(conf);
        }
    }
    Ok(FeatureDataset {
        name: meta.name,
        num_classes: meta.num_classes,
        feature_dim: meta.feature_dim,
        samples,
        class_names: meta.class_names,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            FeatureSetError::MissingFile(path.to_path_buf())
        } else {
            FeatureSetError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// Loads and validates a feature-dump directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<FeatureDataset> {
    let dir = dir.as_ref();
    let meta_bytes = read_file(&dir.join(META_FILE))?;
    let meta_text = String::from_utf8(meta_bytes)
        .map_err(|_| FeatureSetError::schema(META_FILE, "not valid UTF-8"))?;
    let meta = parse_meta(&meta_text)?;
    let samples = parse_features(&meta, &read_file(&dir.join(FEATURES_FILE))?)?;
    let conf_path = dir.join(CONFIDENCES_FILE);
    let confidences = if conf_path.exists() {
        Some(parse_confidences(&meta, &read_file(&conf_path)?)?)
    } else {
        None
    };
    assemble(meta, samples, confidences)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FeatureSetError + '_ {
    move |source| FeatureSetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> FeatureSetError + '_ {
    move |e| FeatureSetError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e.to_string()),
    }
}

/// Writes `dataset` as a dump directory, creating it if needed.
/// `confidences.csv` is written only when every sample carries a vector.
///
/// Floats use Rust's shortest round-trip representation, so a reload gives
/// back identical values.
pub fn write_dataset(dataset: &FeatureDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let meta_path = dir.join(META_FILE);
    let mut meta = serde_json::to_string_pretty(&dataset.meta()).expect("meta serializes");
    meta.push('\n');
    fs::write(&meta_path, meta).map_err(io_err(&meta_path))?;

    let feat_path = dir.join(FEATURES_FILE);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&feat_path)
        .map_err(csv_err(&feat_path))?;
    w.write_record(features_header(dataset.feature_dim))
        .map_err(csv_err(&feat_path))?;
    for s in &dataset.samples {
        let mut row = vec![s.id.clone(), s.label.to_string()];
        row.extend(s.features.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err(&feat_path))?;
    }
    w.flush().map_err(io_err(&feat_path))?;

    let conf_path = dir.join(CONFIDENCES_FILE);
    if !dataset.is_empty() && dataset.has_confidences() {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&conf_path)
            .map_err(csv_err(&conf_path))?;
        w.write_record(confidences_header(dataset.num_classes))
            .map_err(csv_err(&conf_path))?;
        for s in &dataset.samples {
            let mut row = vec![s.id.clone()];
            row.extend(s.confidence.iter().flatten().map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err(&conf_path))?;
        }
        w.flush().map_err(io_err(&conf_path))?;
    } else if conf_path.exists() {
        fs::remove_file(&conf_path).map_err(io_err(&conf_path))?;
    }
    Ok(())
}
