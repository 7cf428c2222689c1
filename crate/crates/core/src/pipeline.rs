//! The end-to-end demo: synthetic blobs, two reference providers, metrics,
//! covariate shift and the full robustness sweep.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifier::{
    make_blobs, predict_confidences, train_logistic, BlobSpec, ClassifierError, ConfidenceProvider,
    LogisticConfig, NearestCentroidSoftmax,
};
use crate::generator::{sweep, GenerationConfig, GenerationError, SweepMatrix};
use crate::metrics::{compute_centroids, quality_report, MetricConfig, MetricsError};
use crate::report::{
    self, boxplot_rows, AnalysisReport, DatasetNames, ReportError, BOXPLOT_FILE, REPORT_FILE,
    SWEEP_FILE,
};
use crate::shift::{covariate_shift, ShiftConfig, ShiftError};

pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// Sizes and settings of the demo run.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub seed: u64,
    pub num_classes: usize,
    pub spacing: f64,
    pub sigma: f64,
    pub per_class: usize,
    /// Softmax temperature of the nearest-centroid provider.
    pub temperature: f64,
    pub metric: MetricConfig,
    pub shift: ShiftConfig,
    pub generation: GenerationConfig,
    pub logistic: LogisticConfig,
}

impl DemoConfig {
    /// Ten moderately overlapping classes. The nearest-centroid rule gets
    /// about 90% of the test set right.
    pub fn new(seed: u64) -> Self {
        DemoConfig {
            seed,
            num_classes: 10,
            spacing: 3.0,
            sigma: 1.0,
            per_class: 100,
            temperature: 1.0,
            metric: MetricConfig::default(),
            shift: ShiftConfig {
                seed,
                ..ShiftConfig::default()
            },
            generation: GenerationConfig {
                seed,
                ..GenerationConfig::default()
            },
            logistic: LogisticConfig {
                seed,
                ..LogisticConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub report: AnalysisReport,
    pub sweeps: Vec<SweepMatrix>,
    pub files: Vec<PathBuf>,
}

/// Runs the demo in memory. Quality metrics use the logistic model's
/// confidences, since it plays the role of the trained model under test.
pub fn run_demo_in_memory(cfg: &DemoConfig) -> Result<(AnalysisReport, String), PipelineError> {
    let spec = BlobSpec::simplex(
        cfg.num_classes,
        cfg.spacing,
        cfg.sigma,
        cfg.per_class,
        cfg.seed,
    );
    let (train, test) = make_blobs(&spec)?;
    let centroids = compute_centroids(&train, "train")?;

    let logistic = train_logistic(&train, &cfg.logistic)?;
    let nearest = NearestCentroidSoftmax::new(centroids.centroids.clone(), cfg.temperature)?;
    let providers: [&dyn ConfidenceProvider; 2] = [&nearest, &logistic];

    let scored = predict_confidences(&logistic, &test)?;
    let quality = quality_report(&train, &scored, &cfg.metric)?;
    let shift = covariate_shift(&train, &test, &cfg.shift)?;

    let mut sweeps = Vec::new();
    for provider in providers {
        let scored = predict_confidences(provider, &test)?;
        sweeps.push(sweep(
            &scored,
            &centroids,
            provider,
            &cfg.generation,
            &cfg.metric,
        )?);
    }

    let mut rep = AnalysisReport::new(cfg.seed, cfg.metric);
    rep.datasets = DatasetNames {
        train: Some(train.name.clone()),
        test: Some(test.name.clone()),
    };
    rep.quality = Some(quality);
    rep.shift = Some(shift);
    rep.generation_config = Some(cfg.generation.clone());
    rep.sweep = sweeps;
    rep.notes = vec![
        format!(
            "synthetic blobs: {} classes, spacing {}, sigma {}, {} train and {} test points per class",
            cfg.num_classes, cfg.spacing, cfg.sigma, cfg.per_class, cfg.per_class
        ),
        "quality metrics use logistic-model confidences".into(),
        "boundary points are bisected toward the pair centroid until the pair class is predicted with top-1 confidence in [theta1, theta2]".into(),
    ];
    rep.refresh_undefined();
    Ok((rep, logistic.to_json()))
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, PipelineError> {
    fs::write(&path, contents).map_err(|source| PipelineError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Runs the demo and writes `report.json`, `sweep.csv`, `boxplot.csv` and
/// `model.json` into `out_dir`.
pub fn run_demo(out_dir: impl AsRef<Path>, cfg: &DemoConfig) -> Result<DemoOutcome, PipelineError> {
    let out = out_dir.as_ref();
    fs::create_dir_all(out).map_err(|source| PipelineError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let (rep, model_json) = run_demo_in_memory(cfg)?;
    let boxplot = boxplot_rows(rep.quality.as_ref().expect("demo computes quality"));
    let files = vec![
        write(out.join(REPORT_FILE), &report::report_to_string(&rep)?)?,
        write(out.join(SWEEP_FILE), &report::sweep_csv(&rep.sweep)?)?,
        write(out.join(BOXPLOT_FILE), &report::boxplot_csv(&boxplot))?,
        write(out.join(MODEL_FILE), &model_json)?,
    ];
    Ok(DemoOutcome {
        sweeps: rep.sweep.clone(),
        report: rep,
        files,
    })
}
