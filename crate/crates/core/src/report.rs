//! Stable report files: canonical `report.json`, `boxplot.csv` and
//! `sweep.csv`.
//!
//! Canonical JSON means sorted keys, two-space indentation, floats written
//! with 17 significant digits and a trailing LF. Identical reports always
//! produce identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::generator::{GenerationConfig, SweepMatrix, SWEEP_SPLITS};
use crate::metrics::{MetricConfig, QualityReport};
use crate::shift::ShiftReport;
use crate::vecmath::quantile_sorted;

pub const SCHEMA_VERSION: &str = "1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_FILE: &str = "report.json";
pub const BOXPLOT_FILE: &str = "boxplot.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

pub const BOXPLOT_HEADER: [&str; 6] = ["metric", "min", "q1", "median", "q3", "max"];
pub const SWEEP_HEADER: [&str; 9] = [
    "dataset",
    "provider",
    "accuracy_full",
    "samples",
    "split_0_100",
    "split_30_70",
    "split_50_50",
    "split_70_30",
    "split_100_0",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("report contains a non-finite number")]
    NonFinite,
    #[error("invalid report JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema version `{0}`")]
    SchemaVersion(String),
    #[error("no defined values for {0}")]
    AllUndefined(String),
    #[error("sweep matrix has no cells")]
    EmptySweep,
}

pub type Result<T, E = ReportError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetNames {
    pub train: Option<String>,
    pub test: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub tool_version: String,
    pub seed: u64,
    pub datasets: DatasetNames,
    pub metric_config: MetricConfig,
    pub quality: Option<QualityReport>,
    pub shift: Option<ShiftReport>,
    pub generation_config: Option<GenerationConfig>,
    pub sweep: Vec<SweepMatrix>,
    /// Union of the classes flagged undefined by any section.
    pub undefined_classes: Vec<usize>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn new(seed: u64, metric_config: MetricConfig) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            datasets: DatasetNames::default(),
            metric_config,
            quality: None,
            shift: None,
            generation_config: None,
            sweep: Vec::new(),
            undefined_classes: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Recomputes `undefined_classes` from the embedded sections.
    pub fn refresh_undefined(&mut self) {
        let mut all: Vec<usize> = self
            .quality
            .iter()
            .flat_map(|q| q.undefined_classes.iter().copied())
            .chain(
                self.shift
                    .iter()
                    .flat_map(|s| s.undefined_classes.iter().copied()),
            )
            .collect();
        all.sort_unstable();
        all.dedup();
        self.undefined_classes = all;
    }
}

/// Formats a float with 17 significant digits, like C's `%.17g`, but always
/// keeps a `.0` or exponent so the token reads back as a float.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{exp}");
    }
    let prec = (16 - exp).max(0) as usize;
    let mut s = format!("{x:.prec$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').len();
        s.truncate(trimmed);
        if s.ends_with('.') {
            s.push('0');
        }
    } else {
        s.push_str(".0");
    }
    s
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (None, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&format_float(n.as_f64().expect("float"))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(": ");
                write_value(out, &map[key.as_str()], indent + 2);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Canonical JSON text for any serializable value.
///
/// Fails on NaN or infinities: `serde_json` would silently turn them into
/// `null`, so the value is read back and compared against the original.
pub fn to_canonical_json<T>(value: &T) -> Result<String>
where
    T: Serialize + for<'de> Deserialize<'de> + PartialEq,
{
    let v = serde_json::to_value(value)?;
    let back: T = serde_json::from_value(v.clone()).map_err(|_| ReportError::NonFinite)?;
    if &back != value {
        return Err(ReportError::NonFinite);
    }
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn report_to_string(report: &AnalysisReport) -> Result<String> {
    to_canonical_json(report)
}

pub fn parse_report(text: &str) -> Result<AnalysisReport> {
    let report: AnalysisReport = serde_json::from_str(text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(ReportError::SchemaVersion(report.schema_version));
    }
    Ok(report)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_report(report: &AnalysisReport, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &report_to_string(report)?)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<AnalysisReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_report(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Five-number summary over the defined entries, inclusive linear quartiles.
pub fn boxplot_summary(values: &[Option<f64>]) -> Result<BoxplotSummary> {
    let mut v: Vec<f64> = values.iter().flatten().copied().collect();
    if v.is_empty() {
        return Err(ReportError::AllUndefined("boxplot input".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ReportError::NonFinite);
    }
    v.sort_by(f64::total_cmp);
    Ok(BoxplotSummary {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// Per-metric inputs for the box plots. PBC contributes each unordered class
/// pair once, skipping pairs where both classes are empty.
pub fn metric_values(quality: &QualityReport) -> Vec<(&'static str, Vec<Option<f64>>)> {
    let mut rows = vec![
        ("ep", quality.ep.iter().map(|&x| Some(x)).collect()),
        ("cp", quality.cp.clone()),
    ];
    if let Some(bc) = &quality.bc {
        rows.push(("bc", bc.clone()));
    }
    if let Some(pbc) = &quality.pbc {
        let n = &quality.per_class_counts;
        let mut pairs = Vec::new();
        for i in 0..pbc.len() {
            for j in i + 1..pbc.len() {
                pairs.push((n[i] + n[j] > 0).then_some(pbc[i][j]));
            }
        }
        rows.push(("pbc", pairs));
    }
    rows
}

/// Summaries for every metric that has at least one defined value.
pub fn boxplot_rows(quality: &QualityReport) -> Vec<(String, BoxplotSummary)> {
    metric_values(quality)
        .into_iter()
        .filter_map(|(name, vals)| boxplot_summary(&vals).ok().map(|b| (name.to_string(), b)))
        .collect()
}

pub fn boxplot_csv(rows: &[(String, BoxplotSummary)]) -> String {
    let mut out = BOXPLOT_HEADER.join(",");
    out.push('\n');
    for (name, b) in rows {
        let cells = [b.min, b.q1, b.median, b.q3, b.max].map(format_float);
        out.push_str(&format!("{name},{}\n", cells.join(",")));
    }
    out
}

pub fn emit_boxplot(rows: &[(String, BoxplotSummary)], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &boxplot_csv(rows))
}

/// One Table-2 style row: overall accuracy per split column.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dataset: String,
    pub provider: String,
    pub accuracy_full: Option<f64>,
    pub samples: usize,
    /// Indexed like [`SWEEP_SPLITS`]; `None` leaves the cell empty.
    pub splits: [Option<f64>; 5],
}

/// Column index for a centroid percentage, if it is one of the table splits.
pub fn split_column(centroid_pct: f64) -> Option<usize> {
    SWEEP_SPLITS.iter().position(|&s| s == centroid_pct)
}

/// Rows of a sweep matrix, one per generated-set size in grid order.
pub fn sweep_rows(matrix: &SweepMatrix) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = Vec::new();
    for cell in &matrix.cells {
        let idx = match rows.iter().position(|r| r.samples == cell.samples) {
            Some(i) => i,
            None => {
                rows.push(SweepRow {
                    dataset: matrix.dataset.clone(),
                    provider: matrix.provider.clone(),
                    accuracy_full: Some(matrix.accuracy_full),
                    samples: cell.samples,
                    splits: [None; 5],
                });
                rows.len() - 1
            }
        };
        if let Some(col) = split_column(cell.centroid_pct) {
            rows[idx].splits[col] = cell.evaluation.overall;
        }
    }
    rows
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn sweep_line(row: &SweepRow) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut record = vec![
        row.dataset.clone(),
        row.provider.clone(),
        opt_float(row.accuracy_full),
        row.samples.to_string(),
    ];
    record.extend(row.splits.iter().map(|&x| opt_float(x)));
    w.write_record(&record).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn sweep_csv(matrices: &[SweepMatrix]) -> Result<String> {
    if matrices.iter().all(|m| m.cells.is_empty()) {
        return Err(ReportError::EmptySweep);
    }
    let mut out = SWEEP_HEADER.join(",");
    out.push('\n');
    for m in matrices {
        for row in sweep_rows(m) {
            out.push_str(&sweep_line(&row));
        }
    }
    Ok(out)
}

pub fn emit_sweep_table(matrices: &[SweepMatrix], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &sweep_csv(matrices)?)
}

/// Appends one row, writing the header first when the file is new or empty.
pub fn append_sweep_row(row: &SweepRow, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err)?;
    let mut text = String::new();
    if fresh {
        text.push_str(&SWEEP_HEADER.join(","));
        text.push('\n');
    }
    text.push_str(&sweep_line(row));
    f.write_all(text.as_bytes()).map_err(io_err)
}
