//! `covcheck` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid data, 3 dimension
//! mismatch between inputs, 64 usage error.

mod errors;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use covcheck::classifier::{
    accuracy, parse_model_json, predict_confidences, train_logistic, ConfidenceProvider,
    LogisticConfig, NearestCentroidSoftmax,
};
use covcheck::featureset::{self, load_dataset, FeatureDataset};
use covcheck::generator::{
    self, evaluate_samples, generate_test_set, load_generated, write_generated, GenerationConfig,
};
use covcheck::metrics::{self, compute_centroids, quality_report, CentroidModel, MetricConfig};
use covcheck::pipeline::{run_demo, DemoConfig};
use covcheck::report::{self, AnalysisReport, DatasetNames, SweepRow, BOXPLOT_FILE};
use covcheck::shift::{covariate_shift, ShiftConfig};

use errors::{Failure, Outcome, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "covcheck",
    version,
    about = "Feature-space test coverage analysis for classifiers"
)]
struct Cli {
    /// Seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Suppress the human-readable summary on standard output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads (defaults to the number of CPUs). Results do not
    /// depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a feature dump against the format contract.
    Validate {
        #[arg(long)]
        data: PathBuf,
    },
    /// Compute EP, CP, BC and PBC and write report.json plus boxplot.csv.
    Metrics {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate per-class covariate shift between train and test.
    Shift {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 10)]
        components: usize,
        #[arg(long = "mc-samples", default_value_t = 20_000)]
        mc_samples: usize,
        #[arg(long = "max-iters", default_value_t = 200)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate centroid and boundary test points.
    Generate {
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Percentage of points placed in centroid regions.
        #[arg(long)]
        split: f64,
        #[arg(long)]
        count: usize,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        generation: GenerationArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a provider on a generated set and append a row to a sweep table.
    Evaluate {
        #[arg(long)]
        gen: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Original test set; fills the `accuracy_full` column.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole pipeline on synthetic blobs.
    Demo {
        #[arg(long, default_value = "covcheck-demo")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Normalized-distance threshold for centroid positioning.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 0.4)]
    theta1: f64,
    #[arg(long, default_value_t = 0.6)]
    theta2: f64,
}

impl MetricArgs {
    fn config(&self) -> Result<MetricConfig, Failure> {
        let cfg = MetricConfig {
            r: self.r,
            theta1: self.theta1,
            theta2: self.theta2,
        };
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct GenerationArgs {
    /// Lowest top-1 confidence for a boundary seed.
    #[arg(long = "wc-l", default_value_t = 0.40)]
    wc_l: f64,
    #[arg(long = "sigma-centroid", default_value_t = 0.10)]
    sigma_centroid: f64,
    #[arg(long = "sigma-boundary", default_value_t = 0.02)]
    sigma_boundary: f64,
    #[arg(long = "max-rejection-iters", default_value_t = 100)]
    max_rejection_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    /// Softmax over negative distances to class centroids.
    Centroid,
    /// Multinomial logistic regression trained on `--train`.
    Logistic,
    /// A saved logistic model (`--model`).
    File,
}

#[derive(Debug, Args)]
struct ProviderArgs {
    #[arg(long, value_enum)]
    provider: ProviderKind,
    /// Training set for centroids and for the logistic provider.
    #[arg(long)]
    train: Option<PathBuf>,
    /// model.json for `--provider file`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Softmax temperature of the centroid provider.
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
}

impl ProviderArgs {
    fn check(&self) -> Result<(), Failure> {
        if self.provider == ProviderKind::Logistic && self.train.is_none() {
            return Err(Failure::usage("--provider logistic requires --train"));
        }
        if self.provider == ProviderKind::File && self.model.is_none() {
            return Err(Failure::usage("--provider file requires --model"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Failure::usage("--temperature must be positive"));
        }
        Ok(())
    }

    /// Builds the provider; centroids come from `--train` when given and from
    /// `fallback` otherwise.
    fn build(
        &self,
        train: Option<&FeatureDataset>,
        fallback: &FeatureDataset,
        seed: u64,
    ) -> Result<Box<dyn ConfidenceProvider>, Failure> {
        Ok(match self.provider {
            ProviderKind::Centroid => {
                let cm = compute_centroids(train.unwrap_or(fallback), "provider")?;
                Box::new(NearestCentroidSoftmax::new(cm.centroids, self.temperature)?)
            }
            ProviderKind::Logistic => {
                let cfg = LogisticConfig {
                    seed,
                    ..LogisticConfig::default()
                };
                Box::new(train_logistic(train.expect("checked"), &cfg)?)
            }
            ProviderKind::File => {
                let path = self.model.as_ref().expect("checked");
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
                Box::new(parse_model_json(&text)?)
            }
        })
    }

    fn load_train(&self) -> Result<Option<FeatureDataset>, Failure> {
        self.train.as_deref().map(load).transpose()
    }
}

fn load(dir: &Path) -> Result<FeatureDataset, Failure> {
    Ok(load_dataset(dir)?)
}

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn cmd_validate(ctx: &Ctx, data: &Path) -> Outcome {
    let ds = match load_dataset(data) {
        Ok(ds) => ds,
        Err(e) if e.is_io() => return Err(e.into()),
        Err(e) => {
            eprintln!("{e}");
            return Err(Failure::data("dataset is invalid"));
        }
    };
    let violations = featureset::validate(&ds);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(Failure::data(format!("{} violation(s)", violations.len())));
    }
    let st = featureset::stats(&ds);
    ctx.say(format!(
        "{}: {} samples, {} classes, {} features, confidences {}; per-class counts {:?}",
        ds.name,
        st.total,
        ds.num_classes,
        ds.feature_dim,
        if ds.has_confidences() {
            "present"
        } else {
            "absent"
        },
        st.per_class_counts
    ));
    Ok(())
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    out.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from(name), |p| p.join(name))
}

fn cmd_metrics(ctx: &Ctx, train: &Path, test: &Path, metric: &MetricArgs, out: &Path) -> Outcome {
    let cfg = metric.config()?;
    let train = load(train)?;
    let test = load(test)?;
    metrics::check_compatible(&train, &test)?;
    let quality = quality_report(&train, &test, &cfg)?;
    let mut rep = AnalysisReport::new(ctx.seed, cfg);
    rep.datasets = DatasetNames {
        train: Some(train.name.clone()),
        test: Some(test.name.clone()),
    };
    if quality.bc.is_none() {
        let note = "test set has no confidences; BC and PBC skipped";
        warn(note);
        rep.notes.push(note.to_string());
    }
    let rows = report::boxplot_rows(&quality);
    rep.quality = Some(quality);
    rep.refresh_undefined();
    report::emit_report(&rep, out)?;
    report::emit_boxplot(&rows, sibling(out, BOXPLOT_FILE))?;

    let q = rep.quality.as_ref().expect("set above");
    ctx.say("class  count      EP      CP      BC");
    for c in 0..test.num_classes {
        ctx.say(format!(
            "{c:>5} {:>6} {:>7.4} {:>7} {:>7}",
            q.per_class_counts[c],
            q.ep[c],
            fmt_opt(q.cp[c]),
            fmt_opt(q.bc.as_ref().and_then(|b| b[c]))
        ));
    }
    if !rep.undefined_classes.is_empty() {
        warn(format!(
            "classes without test samples: {:?}",
            rep.undefined_classes
        ));
    }
    ctx.say(format!("wrote {}", out.display()));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_shift(
    ctx: &Ctx,
    train: &Path,
    test: &Path,
    components: usize,
    mc_samples: usize,
    max_iters: usize,
    tol: f64,
    out: &Path,
) -> Outcome {
    let cfg = ShiftConfig {
        components,
        max_iters,
        tol,
        mc_samples,
        seed: ctx.seed,
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let train = load(train)?;
    let test = load(test)?;
    let shift = covariate_shift(&train, &test, &cfg)?;
    let mut rep = AnalysisReport::new(ctx.seed, MetricConfig::default());
    rep.datasets = DatasetNames {
        train: Some(train.name.clone()),
        test: Some(test.name.clone()),
    };
    rep.shift = Some(shift);
    rep.refresh_undefined();
    report::emit_report(&rep, out)?;

    let s = rep.shift.as_ref().expect("set above");
    ctx.say("class      JS   std.err");
    for (c, (v, se)) in s.per_class_js.iter().zip(&s.standard_error).enumerate() {
        ctx.say(format!("{c:>5} {:>7} {:>9}", fmt_opt(*v), fmt_opt(*se)));
    }
    if !rep.undefined_classes.is_empty() {
        warn(format!(
            "classes missing from a split: {:?}",
            rep.undefined_classes
        ));
    }
    ctx.say(format!("wrote {}", out.display()));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    ctx: &Ctx,
    test: &Path,
    provider: &ProviderArgs,
    split: f64,
    count: usize,
    metric: &MetricArgs,
    generation: &GenerationArgs,
    out: &Path,
) -> Outcome {
    provider.check()?;
    let metric = metric.config()?;
    let cfg = GenerationConfig {
        wc_l: generation.wc_l,
        sigma_centroid: generation.sigma_centroid,
        sigma_boundary: generation.sigma_boundary,
        max_rejection_iters: generation.max_rejection_iters,
        seed: ctx.seed,
        ..GenerationConfig::default()
    };
    cfg.validate(&metric)
        .map_err(|e| Failure::usage(e.to_string()))?;
    if !(0.0..=100.0).contains(&split) {
        return Err(Failure::usage(format!("--split {split} outside [0, 100]")));
    }

    let test = load(test)?;
    let train = provider.load_train()?;
    if let Some(train) = &train {
        metrics::check_compatible(train, &test)?;
    }
    let cm: CentroidModel = match &train {
        Some(train) => compute_centroids(train, "train")?,
        None => compute_centroids(&test, "test")?,
    };
    let p = provider.build(train.as_ref(), &test, ctx.seed)?;
    let scored = predict_confidences(p.as_ref(), &test)?;
    let gen = generate_test_set(&scored, &cm, p.as_ref(), count, split, &cfg, &metric)?;
    write_generated(&gen, out, Some(&test))?;

    if !gen.fallback_classes.is_empty() {
        warn(format!(
            "no weakly classified seeds for classes {:?}; used lowest-margin fallback seeds",
            gen.fallback_classes
        ));
    }
    ctx.say(format!(
        "generated {} points ({} centroid, {} boundary) with provider {}; verification rate {:.4}",
        gen.samples.len(),
        gen.achieved_centroid,
        gen.achieved_boundary,
        p.name(),
        gen.verification_rate
    ));
    ctx.say(format!("wrote {}", out.display()));
    Ok(())
}

fn cmd_evaluate(
    ctx: &Ctx,
    gen_dir: &Path,
    provider: &ProviderArgs,
    test: Option<&Path>,
    out: &Path,
) -> Outcome {
    provider.check()?;
    if provider.provider == ProviderKind::Centroid && provider.train.is_none() && test.is_none() {
        return Err(Failure::usage(
            "--provider centroid needs --train or --test for its centroids",
        ));
    }
    let is_empty_dir = std::fs::read_dir(gen_dir).is_ok_and(|mut d| d.next().is_none());
    if is_empty_dir {
        return Err(Failure::data(format!("{} is empty", gen_dir.display())));
    }
    let (gen_ds, samples) = load_generated(gen_dir)?;
    if samples.is_empty() {
        return Err(Failure::data(format!(
            "{} holds no generated samples",
            gen_dir.display()
        )));
    }
    let train = provider.load_train()?;
    let test = test.map(load).transpose()?;
    let fallback = test.as_ref().unwrap_or(&gen_ds);
    let p = provider.build(train.as_ref(), fallback, ctx.seed)?;
    if p.num_classes() != gen_ds.num_classes || p.feature_dim() != gen_ds.feature_dim {
        return Err(Failure::mismatch(format!(
            "provider expects {} classes x {} features, generated set has {} x {}",
            p.num_classes(),
            p.feature_dim(),
            gen_ds.num_classes,
            gen_ds.feature_dim
        )));
    }
    let accuracy_full = test.as_ref().map(|t| accuracy(p.as_ref(), t)).transpose()?;
    let rec = evaluate_samples(&samples, gen_ds.num_classes, p.as_ref());

    // Place the accuracy in the table column closest to the achieved split.
    let pct = 100.0 * rec.centroid_count as f64 / rec.total as f64;
    let col = generator::SWEEP_SPLITS
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - pct).abs().total_cmp(&(b.1 - pct).abs()))
        .map(|(i, _)| i)
        .expect("non-empty split list");
    let mut splits = [None; 5];
    splits[col] = rec.overall;
    let row = SweepRow {
        dataset: gen_ds.name.clone(),
        provider: p.name().to_string(),
        accuracy_full,
        samples: rec.total,
        splits,
    };
    report::append_sweep_row(&row, out)?;

    ctx.say(format!(
        "{} samples ({} centroid, {} boundary): overall {}, centroid {}, boundary {}",
        rec.total,
        rec.centroid_count,
        rec.boundary_count,
        fmt_opt(rec.overall),
        fmt_opt(rec.centroid),
        fmt_opt(rec.boundary)
    ));
    for (c, a) in rec.per_class.iter().enumerate() {
        ctx.say(format!("  class {c}: {}", fmt_opt(*a)));
    }
    ctx.say(format!("appended row to {}", out.display()));
    Ok(())
}

fn cmd_demo(ctx: &Ctx, out: &Path) -> Outcome {
    let cfg = DemoConfig::new(ctx.seed);
    let outcome = run_demo(out, &cfg)?;
    for m in &outcome.sweeps {
        ctx.say(format!(
            "provider {} (full test accuracy {:.4})",
            m.provider, m.accuracy_full
        ));
        for row in report::sweep_rows(m) {
            let cells: Vec<String> = row.splits.iter().map(|&a| fmt_opt(a)).collect();
            ctx.say(format!(
                "  {:>5} samples: {}",
                row.samples,
                cells.join("  ")
            ));
        }
    }
    for f in &outcome.files {
        ctx.say(format!("wrote {}", f.display()));
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Validate { data } => cmd_validate(&ctx, data),
        Command::Metrics {
            train,
            test,
            metric,
            out,
        } => cmd_metrics(&ctx, train, test, metric, out),
        Command::Shift {
            train,
            test,
            components,
            mc_samples,
            max_iters,
            tol,
            out,
        } => cmd_shift(
            &ctx,
            train,
            test,
            *components,
            *mc_samples,
            *max_iters,
            *tol,
            out,
        ),
        Command::Generate {
            test,
            provider,
            split,
            count,
            metric,
            generation,
            out,
        } => cmd_generate(
            &ctx, test, provider, *split, *count, metric, generation, out,
        ),
        Command::Evaluate {
            gen,
            provider,
            test,
            out,
        } => cmd_evaluate(&ctx, gen, provider, test.as_deref(), out),
        Command::Demo { out } => cmd_demo(&ctx, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
