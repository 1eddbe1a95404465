//! Command-line frontend: one subcommand per workflow stage, all delegating
//! to the library. Payload files written via `--out` are pure functions of
//! (inputs, flags, seed) and byte-identical across reruns; wall-clock timing
//! only ever appears in the run report, never in payloads.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::audio_io::{read_wav, DitherConfig};
use crate::benford;
use crate::classify::{
    self, ConfusionMatrix, KernelKind, Label, LabeledSample, SvmConfig, SvmModelFile,
};
use crate::datagen::{self, CorpusClasses, CorpusConfig};
use crate::error::{Error, Result};
use crate::features::{
    self, AnalysisConfig, BensFeatureVector, FeatureRow, NormStats, NormStatsFile,
};
use crate::manifest::{Manifest, SampleLabel};
use crate::seed;
use crate::spectral::{FrameConfig, Window};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Per-file outcome of a parallel manifest pass, keyed by manifest index so
/// output order never depends on scheduling.
type FileOutcome<T> = (usize, std::result::Result<T, String>);

#[derive(Debug, Parser)]
#[command(
    name = "bens",
    version,
    about = "Benford-similarity analysis of audio spectra: conformity studies, BenS features, and SVM-based human/synthetic classification"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base seed for every random stream (dither noise, generators, SMO).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Analysis frame length in milliseconds.
    #[arg(long, global = true, default_value_t = 25.0)]
    frame_ms: f64,

    /// Frame advance (hop) in milliseconds.
    #[arg(long, global = true, default_value_t = 10.0)]
    hop_ms: f64,

    /// Analysis window.
    #[arg(long, global = true, value_enum, default_value_t = WindowArg::Rectangular)]
    window: WindowArg,

    /// Dither noise scale: standard deviation = peak amplitude / divisor.
    #[arg(long, global = true, default_value_t = 1000.0)]
    dither_divisor: f64,

    /// Disable dithering entirely.
    #[arg(long, global = true)]
    no_dither: bool,

    /// Worker threads for file-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WindowArg {
    Rectangular,
    Hann,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Rectangular => Window::Rectangular,
            WindowArg::Hann => Window::Hann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassesArg {
    Voiced,
    Noise,
    Both,
}

impl From<ClassesArg> for CorpusClasses {
    fn from(c: ClassesArg) -> Self {
        match c {
            ClassesArg::Voiced => CorpusClasses::Voiced,
            ClassesArg::Noise => CorpusClasses::Noise,
            ClassesArg::Both => CorpusClasses::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Linear,
    Poly,
}

/// SVM flags shared by `train` and `loso`.
#[derive(Debug, Args)]
struct SvmArgs {
    /// Kernel family.
    #[arg(long, value_enum, default_value_t = KernelArg::Poly)]
    kernel: KernelArg,

    /// Polynomial degree (2 = quadratic).
    #[arg(long, default_value_t = 2)]
    degree: u32,

    /// Polynomial offset term.
    #[arg(long, default_value_t = 1.0)]
    coef0: f64,

    /// Box constraint C.
    #[arg(long, default_value_t = 1.0)]
    c: f64,

    /// KKT tolerance.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,

    /// Consecutive unchanged sweeps before the solver stops.
    #[arg(long, default_value_t = 100)]
    max_passes: usize,
}

impl SvmArgs {
    fn to_config(&self, seed: u64) -> SvmConfig {
        SvmConfig {
            kernel: match self.kernel {
                KernelArg::Linear => KernelKind::Linear,
                KernelArg::Poly => KernelKind::Polynomial {
                    degree: self.degree,
                    coef0: self.coef0,
                },
            },
            c: self.c,
            tol: self.tol,
            max_passes: self.max_passes,
            seed,
            track_objective: false,
        }
    }

    fn snapshot(&self) -> Value {
        json!({
            "kernel": format!("{:?}", self.kernel).to_lowercase(),
            "degree": self.degree,
            "coef0": self.coef0,
            "c": self.c,
            "tol": self.tol,
            "max_passes": self.max_passes,
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus conformity study: per-speaker digit distributions, their
    /// average, and the regression against the ideal law.
    Conformity {
        /// Manifest CSV (path,speaker_id,label).
        #[arg(long)]
        manifest: PathBuf,
        /// Write the JSON payload here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the 11 BenS features per utterance into a feature CSV.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        /// Output feature CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit per-feature normalization statistics from a feature CSV.
    FitNorm {
        /// Input feature CSV.
        #[arg(long)]
        features: PathBuf,
        /// Output normalization JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// z-score a feature CSV with previously fitted statistics.
    ApplyNorm {
        #[arg(long)]
        features: PathBuf,
        /// Normalization JSON from fit-norm.
        #[arg(long)]
        norm: PathBuf,
        /// Output feature CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an SVM on a labeled feature CSV.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Optional normalization JSON; when given, features are z-scored
        /// before training and the stats id is recorded in the model.
        #[arg(long)]
        norm: Option<PathBuf>,
        /// Output model JSON.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        svm: SvmArgs,
    },
    /// Classify a feature CSV with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Normalization JSON; required when the model records a stats id.
        #[arg(long)]
        norm: Option<PathBuf>,
        /// Output predictions CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained model against a labeled feature CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Normalization JSON; required when the model records a stats id.
        #[arg(long)]
        norm: Option<PathBuf>,
        /// Write the evaluation JSON payload here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-speaker-out evaluation over a raw (unnormalized) feature
    /// CSV; normalization is refit inside every fold.
    Loso {
        #[arg(long)]
        features: PathBuf,
        /// Write the evaluation JSON payload here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        svm: SvmArgs,
    },
    /// Generate a seeded synthetic corpus (WAV files plus manifest.csv).
    Datagen {
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
        /// Speakers per class.
        #[arg(long, default_value_t = 20)]
        speakers: usize,
        /// Utterances per speaker.
        #[arg(long, default_value_t = 10)]
        utterances: usize,
        #[arg(long, value_enum, default_value_t = ClassesArg::Both)]
        classes: ClassesArg,
        #[arg(long, default_value_t = 1.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 16000)]
        sample_rate: u32,
    },
}

/// Entry point used by `main`: parse `std::env::args`, run, map to an exit
/// code (0 ok, 1 usage, 2 data, 3 internal).
pub fn run() -> u8 {
    run_with_args(std::env::args())
}

/// Testable entry point over explicit arguments.
pub fn run_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli))
}

fn analysis_config(cli: &Cli) -> AnalysisConfig {
    AnalysisConfig {
        frame: FrameConfig {
            frame_ms: cli.frame_ms,
            hop_ms: cli.hop_ms,
            window: cli.window.into(),
        },
        dither: (!cli.no_dither).then_some(DitherConfig {
            divisor: cli.dither_divisor,
            seed: cli.seed,
        }),
        min_retained_frames: 10,
    }
}

fn global_snapshot(cli: &Cli) -> Value {
    json!({
        "seed": cli.seed,
        "frame_ms": cli.frame_ms,
        "hop_ms": cli.hop_ms,
        "window": format!("{:?}", cli.window).to_lowercase(),
        "dither_divisor": cli.dither_divisor,
        "no_dither": cli.no_dither,
        "jobs": cli.jobs,
    })
}

fn dispatch(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let (name, config, results, text) = match &cli.command {
        Command::Conformity { manifest, out } => {
            let (results, text) = cmd_conformity(cli, manifest, out.as_deref())?;
            (
                "conformity",
                json!({ "global": global_snapshot(cli), "manifest": manifest, "out": out }),
                results,
                text,
            )
        }
        Command::Extract { manifest, out } => {
            let (results, text) = cmd_extract(cli, manifest, out)?;
            (
                "extract",
                json!({ "global": global_snapshot(cli), "manifest": manifest, "out": out }),
                results,
                text,
            )
        }
        Command::FitNorm { features, out } => {
            let (results, text) = cmd_fit_norm(features, out)?;
            (
                "fit-norm",
                json!({ "global": global_snapshot(cli), "features": features, "out": out }),
                results,
                text,
            )
        }
        Command::ApplyNorm {
            features,
            norm,
            out,
        } => {
            let (results, text) = cmd_apply_norm(features, norm, out)?;
            (
                "apply-norm",
                json!({ "global": global_snapshot(cli), "features": features, "norm": norm, "out": out }),
                results,
                text,
            )
        }
        Command::Train {
            features,
            norm,
            out,
            svm,
        } => {
            let (results, text) = cmd_train(cli, features, norm.as_deref(), out, svm)?;
            (
                "train",
                json!({ "global": global_snapshot(cli), "features": features, "norm": norm, "out": out, "svm": svm.snapshot() }),
                results,
                text,
            )
        }
        Command::Predict {
            model,
            features,
            norm,
            out,
        } => {
            let (results, text) = cmd_predict(model, features, norm.as_deref(), out)?;
            (
                "predict",
                json!({ "global": global_snapshot(cli), "model": model, "features": features, "norm": norm, "out": out }),
                results,
                text,
            )
        }
        Command::Evaluate {
            model,
            features,
            norm,
            out,
        } => {
            let (results, text) = cmd_evaluate(model, features, norm.as_deref(), out.as_deref())?;
            (
                "evaluate",
                json!({ "global": global_snapshot(cli), "model": model, "features": features, "norm": norm, "out": out }),
                results,
                text,
            )
        }
        Command::Loso {
            features,
            out,
            svm,
        } => {
            let (results, text) = cmd_loso(cli, features, out.as_deref(), svm)?;
            (
                "loso",
                json!({ "global": global_snapshot(cli), "features": features, "out": out, "svm": svm.snapshot() }),
                results,
                text,
            )
        }
        Command::Datagen {
            out_dir,
            speakers,
            utterances,
            classes,
            duration_s,
            sample_rate,
        } => {
            let cfg = CorpusConfig {
                seed: cli.seed,
                speakers_per_class: *speakers,
                utterances_per_speaker: *utterances,
                classes: (*classes).into(),
                duration_s: *duration_s,
                sample_rate_hz: *sample_rate,
            };
            let (results, text) = cmd_datagen(out_dir, &cfg)?;
            (
                "datagen",
                json!({ "global": global_snapshot(cli), "corpus": cfg, "out_dir": out_dir }),
                results,
                text,
            )
        }
    };

    let timing_ms = started.elapsed().as_millis() as u64;
    match cli.format {
        FormatArg::Json => {
            let report = json!({
                "command": name,
                "tool_version": TOOL_VERSION,
                "config": config,
                "results": results,
                "timing_ms": timing_ms,
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("report is serializable"));
        }
        FormatArg::Text => {
            println!("{text}");
            println!("[{name} finished in {timing_ms} ms]");
        }
    }
    Ok(())
}

fn write_json_payload(path: &Path, payload: &Value) -> Result<()> {
    let body = serde_json::to_string_pretty(payload)
        .map_err(|e| Error::Internal(format!("serialize payload: {e}")))?;
    std::fs::write(path, body + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Round to four significant digits for the human-readable report.
fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 3 - x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits);
    let rounded = (x * factor).round() / factor;
    format!("{:.*}", digits.clamp(0, 12) as usize, rounded)
}

// ---- conformity ----

fn cmd_conformity(cli: &Cli, manifest: &Path, out: Option<&Path>) -> Result<(Value, String)> {
    let manifest = Manifest::read(manifest)?;
    let cfg = analysis_config(cli);

    let outcomes: Vec<FileOutcome<(benford::DigitHistogram, usize)>> =
        manifest
            .entries
            .par_iter()
            .enumerate()
            .map(|(idx, entry)| {
                let per_file = cfg.with_dither_seed(seed::mix(cli.seed, idx as u64));
                let result = read_wav(&entry.path)
                    .and_then(|audio| features::utterance_digit_histogram(&audio, &per_file))
                    .map_err(|e| e.to_string());
                (idx, result)
            })
            .collect();

    let mut per_speaker: std::collections::BTreeMap<String, benford::DigitHistogram> =
        Default::default();
    let mut files_ok = 0usize;
    let mut failed = Vec::new();
    for (idx, outcome) in outcomes {
        let entry = &manifest.entries[idx];
        match outcome {
            Ok((hist, _frames)) => {
                files_ok += 1;
                per_speaker
                    .entry(entry.speaker_id.clone())
                    .or_default()
                    .merge(&hist);
            }
            Err(reason) => failed.push(json!({
                "path": entry.path.display().to_string(),
                "error": reason,
            })),
        }
    }
    if files_ok == 0 {
        return Err(Error::DataError(
            "no manifest file could be analyzed".into(),
        ));
    }

    let mut speakers = Vec::new();
    let mut pmfs = Vec::new();
    for (speaker, hist) in &per_speaker {
        if hist.total() == 0 {
            continue;
        }
        let pmf = benford::to_pmf(hist)?;
        speakers.push(json!({ "speaker": speaker, "pmf": pmf }));
        pmfs.push(pmf);
    }
    let average = benford::average_speaker_pmfs(&pmfs)?;
    let ideal = benford::ideal_distribution();
    let fit = benford::conformity_regression(&average, &ideal)?;

    let digits: Vec<Value> = (1..=9u8)
        .map(|d| {
            json!({
                "digit": d,
                "ideal": ideal.prob(d),
                "empirical": average.prob(d),
            })
        })
        .collect();

    let payload = json!({
        "files_ok": files_ok,
        "files_failed": failed,
        "speaker_count": pmfs.len(),
        "per_speaker": speakers,
        "digits": digits,
        "average": average,
        "fit": fit,
    });
    if let Some(path) = out {
        write_json_payload(path, &payload)?;
    }

    let mut text = String::from("Benford conformity study\n");
    text += &format!("  files analyzed : {files_ok}\n");
    text += &format!("  files skipped  : {}\n", payload["files_failed"].as_array().map_or(0, |a| a.len()));
    text += &format!("  speakers       : {}\n\n", pmfs.len());
    text += "  digit   ideal     empirical\n";
    for d in 1..=9u8 {
        text += &format!(
            "  {d}       {:<9} {}\n",
            sig4(ideal.prob(d)),
            sig4(average.prob(d))
        );
    }
    text += &format!(
        "\n  fit: empirical = {}*ideal + {}   (R^2 = {})\n",
        sig4(fit.slope),
        sig4(fit.intercept),
        sig4(fit.r_squared)
    );
    Ok((payload, text))
}

// ---- extract ----

fn cmd_extract(cli: &Cli, manifest: &Path, out: &Path) -> Result<(Value, String)> {
    let manifest = Manifest::read(manifest)?;
    let cfg = analysis_config(cli);

    let outcomes: Vec<FileOutcome<FeatureRow>> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(idx, entry)| {
            let per_file = cfg.with_dither_seed(seed::mix(cli.seed, idx as u64));
            let result = read_wav(&entry.path)
                .and_then(|audio| features::bens_features(&audio, &per_file))
                .map(|(vector, series)| FeatureRow {
                    sample_id: entry.path.display().to_string(),
                    speaker_id: entry.speaker_id.clone(),
                    label: entry.label,
                    features: vector,
                    frames_total: series.frames_total,
                    frames_rejected: series.frames_rejected,
                })
                .map_err(|e| e.to_string());
            (idx, result)
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (idx, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(reason) => skipped.push(json!({
                "path": manifest.entries[idx].path.display().to_string(),
                "error": reason,
            })),
        }
    }
    if rows.is_empty() {
        return Err(Error::DataError(
            "no manifest file produced features".into(),
        ));
    }
    features::write_feature_csv(out, &rows)?;

    let payload = json!({
        "rows_written": rows.len(),
        "skipped": skipped,
        "out": out.display().to_string(),
    });
    let text = format!(
        "BenS feature extraction\n  rows written : {}\n  rows skipped : {}\n  output       : {}\n",
        rows.len(),
        payload["skipped"].as_array().map_or(0, |a| a.len()),
        out.display()
    );
    Ok((payload, text))
}

// ---- fit-norm / apply-norm ----

fn load_norm_stats(path: &Path) -> Result<NormStats> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let file: NormStatsFile = serde_json::from_str(&body).map_err(|e| Error::JsonFormat {
        what: "normalization statistics",
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    file.into_stats()
}

fn cmd_fit_norm(features_path: &Path, out: &Path) -> Result<(Value, String)> {
    let rows = features::read_feature_csv(features_path)?;
    let vectors: Vec<BensFeatureVector> = rows.iter().map(|r| r.features.clone()).collect();
    let stats = features::fit_norm_stats(&vectors)?;
    let file = NormStatsFile::from_stats(&stats);
    write_json_payload(out, &serde_json::to_value(&file).expect("stats serialize"))?;
    let payload = json!({
        "rows": rows.len(),
        "id": file.id,
        "mu": file.mu,
        "sigma": file.sigma,
        "out": out.display().to_string(),
    });
    let text = format!(
        "Normalization statistics\n  rows : {}\n  id   : {}\n  out  : {}\n",
        rows.len(),
        file.id,
        out.display()
    );
    Ok((payload, text))
}

fn cmd_apply_norm(features_path: &Path, norm: &Path, out: &Path) -> Result<(Value, String)> {
    let rows = features::read_feature_csv(features_path)?;
    let stats = load_norm_stats(norm)?;
    let mut scaled = Vec::with_capacity(rows.len());
    for row in rows {
        let z = features::zscore(&row.features, &stats)?;
        scaled.push(FeatureRow {
            features: BensFeatureVector::from_array(z),
            ..row
        });
    }
    features::write_feature_csv(out, &scaled)?;
    let payload = json!({
        "rows": scaled.len(),
        "norm_id": stats.digest_id(),
        "out": out.display().to_string(),
    });
    let text = format!(
        "Applied z-scoring\n  rows : {}\n  norm : {}\n  out  : {}\n",
        scaled.len(),
        stats.digest_id(),
        out.display()
    );
    Ok((payload, text))
}

// ---- train / predict / loso ----

fn labeled_samples(rows: &[FeatureRow], features_path: &Path) -> Result<Vec<LabeledSample>> {
    rows.iter()
        .map(|r| {
            let label = match r.label {
                SampleLabel::Human => Label::Human,
                SampleLabel::Synthetic => Label::Synthetic,
                SampleLabel::Unlabeled => {
                    return Err(Error::DataError(format!(
                        "sample '{}' in {} is unlabeled; train/loso need human or synthetic labels",
                        r.sample_id,
                        features_path.display()
                    )))
                }
            };
            Ok(LabeledSample {
                sample_id: r.sample_id.clone(),
                speaker_id: r.speaker_id.clone(),
                label,
                features: r.features.to_array().to_vec(),
            })
        })
        .collect()
}

fn cmd_train(
    cli: &Cli,
    features_path: &Path,
    norm: Option<&Path>,
    out: &Path,
    svm: &SvmArgs,
) -> Result<(Value, String)> {
    let rows = features::read_feature_csv(features_path)?;
    let mut samples = labeled_samples(&rows, features_path)?;
    let norm_id = match norm {
        Some(path) => {
            let stats = load_norm_stats(path)?;
            for s in samples.iter_mut() {
                s.features = features::zscore_slice(&s.features, &stats)?;
            }
            stats.digest_id()
        }
        None => "none".to_string(),
    };
    let cfg = svm.to_config(cli.seed);
    let mut model = classify::train_svm(&samples, &cfg)?;
    model.norm_stats_id = norm_id.clone();

    let mut confusion = ConfusionMatrix::default();
    for s in &samples {
        let p = classify::predict(&model, &s.features)?;
        confusion.record(s.label, p.label);
    }
    let train_metrics = classify::report_metrics(&confusion)?;

    let file = SvmModelFile::from_model(&model);
    write_json_payload(out, &serde_json::to_value(&file).expect("model serialize"))?;
    let payload = json!({
        "rows": samples.len(),
        "support_vectors": model.support_vectors.len(),
        "bias": model.bias,
        "norm_stats_id": norm_id,
        "training_accuracy": train_metrics.accuracy,
        "out": out.display().to_string(),
    });
    let text = format!(
        "SVM training\n  rows              : {}\n  support vectors   : {}\n  training accuracy : {}\n  model             : {}\n",
        samples.len(),
        model.support_vectors.len(),
        sig4(train_metrics.accuracy),
        out.display()
    );
    Ok((payload, text))
}

fn load_model(path: &Path) -> Result<classify::SvmModel> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let file: SvmModelFile = serde_json::from_str(&body).map_err(|e| Error::JsonFormat {
        what: "model",
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    Ok(file.into_model())
}

/// Resolve the normalization a model expects: "none" means raw features;
/// any other stats id requires a matching --norm file.
fn resolve_model_stats(
    model: &classify::SvmModel,
    norm: Option<&Path>,
) -> Result<Option<NormStats>> {
    match (model.norm_stats_id.as_str(), norm) {
        ("none", _) => Ok(None),
        (id, Some(path)) => {
            let stats = load_norm_stats(path)?;
            if stats.digest_id() != id {
                return Err(Error::DataError(format!(
                    "normalization mismatch: model expects stats id {id}, {} has {}",
                    path.display(),
                    stats.digest_id()
                )));
            }
            Ok(Some(stats))
        }
        (id, None) => Err(Error::DataError(format!(
            "model was trained on z-scored features (stats id {id}); pass --norm"
        ))),
    }
}

fn cmd_predict(
    model_path: &Path,
    features_path: &Path,
    norm: Option<&Path>,
    out: &Path,
) -> Result<(Value, String)> {
    let model = load_model(model_path)?;
    let rows = features::read_feature_csv(features_path)?;
    let stats = resolve_model_stats(&model, norm)?;

    let mut writer = csv::Writer::from_path(out)
        .map_err(|e| crate::manifest::csv_open_error(out, e))?;
    writer
        .write_record(["sample_id", "speaker_id", "true_label", "predicted_label", "decision_value"])
        .map_err(|e| crate::manifest::csv_write_error(out, e))?;
    let mut confusion = ConfusionMatrix::default();
    let mut labeled = 0usize;
    for row in &rows {
        let mut x = row.features.to_array().to_vec();
        if let Some(stats) = &stats {
            x = features::zscore_slice(&x, stats)?;
        }
        let p = classify::predict(&model, &x)?;
        let truth = match row.label {
            SampleLabel::Human => Some(Label::Human),
            SampleLabel::Synthetic => Some(Label::Synthetic),
            SampleLabel::Unlabeled => None,
        };
        if let Some(t) = truth {
            confusion.record(t, p.label);
            labeled += 1;
        }
        writer
            .write_record([
                row.sample_id.as_str(),
                row.speaker_id.as_str(),
                &row.label.to_string(),
                &p.label.to_string(),
                &p.decision.to_string(),
            ])
            .map_err(|e| crate::manifest::csv_write_error(out, e))?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;

    let accuracy = (labeled > 0)
        .then(|| classify::report_metrics(&confusion).map(|m| m.accuracy))
        .transpose()?;
    let payload = json!({
        "rows": rows.len(),
        "labeled_rows": labeled,
        "accuracy": accuracy,
        "out": out.display().to_string(),
    });
    let text = format!(
        "Prediction\n  rows     : {}\n  labeled  : {labeled}\n  accuracy : {}\n  out      : {}\n",
        rows.len(),
        accuracy.map_or("n/a".into(), sig4),
        out.display()
    );
    Ok((payload, text))
}

/// Confusion matrix and rates rendered in true-rows/predicted-columns order.
fn confusion_text(cm: &ConfusionMatrix, metrics: &classify::Metrics) -> String {
    let mut text = String::new();
    text += "                 predicted\n";
    text += "  true           human      synthetic\n";
    text += &format!("  human          {:<10} {}\n", cm.tp, cm.fn_);
    text += &format!("  synthetic      {:<10} {}\n\n", cm.fp, cm.tn);
    text += &format!("  accuracy           : {}\n", sig4(metrics.accuracy));
    text += &format!(
        "  misclassification  : {}\n",
        sig4(metrics.misclassification_rate)
    );
    if let Some(r) = metrics.recall_human {
        text += &format!("  recall (human)     : {}\n", sig4(r));
    }
    if let Some(r) = metrics.recall_synthetic {
        text += &format!("  recall (synthetic) : {}\n", sig4(r));
    }
    text
}

fn cmd_evaluate(
    model_path: &Path,
    features_path: &Path,
    norm: Option<&Path>,
    out: Option<&Path>,
) -> Result<(Value, String)> {
    let model = load_model(model_path)?;
    let rows = features::read_feature_csv(features_path)?;
    let samples = labeled_samples(&rows, features_path)?;
    let stats = resolve_model_stats(&model, norm)?;

    let mut confusion = ConfusionMatrix::default();
    let mut predictions = Vec::with_capacity(samples.len());
    for s in &samples {
        let x = match &stats {
            Some(stats) => features::zscore_slice(&s.features, stats)?,
            None => s.features.clone(),
        };
        let p = classify::predict(&model, &x)?;
        confusion.record(s.label, p.label);
        predictions.push(json!({
            "sample_id": s.sample_id,
            "true_label": s.label,
            "predicted": p.label,
            "decision": p.decision,
        }));
    }
    let metrics = classify::report_metrics(&confusion)?;
    let payload = json!({
        "rows": samples.len(),
        "confusion_matrix": confusion,
        "metrics": metrics,
        "predictions": predictions,
    });
    if let Some(path) = out {
        write_json_payload(path, &payload)?;
    }
    let text = format!(
        "Model evaluation ({} samples)\n{}",
        samples.len(),
        confusion_text(&confusion, &metrics)
    );
    Ok((payload, text))
}

fn cmd_loso(
    cli: &Cli,
    features_path: &Path,
    out: Option<&Path>,
    svm: &SvmArgs,
) -> Result<(Value, String)> {
    let rows = features::read_feature_csv(features_path)?;
    let samples = labeled_samples(&rows, features_path)?;
    let cfg = svm.to_config(cli.seed);
    let outcome = classify::loso_cv(&samples, &cfg)?;
    let metrics = classify::report_metrics(&outcome.confusion)?;

    let payload = json!({
        "folds": outcome.folds,
        "confusion_matrix": outcome.confusion,
        "metrics": metrics,
    });
    if let Some(path) = out {
        write_json_payload(path, &payload)?;
    }
    let text = format!(
        "LOSO evaluation ({} folds)\n{}",
        outcome.folds.len(),
        confusion_text(&outcome.confusion, &metrics)
    );
    Ok((payload, text))
}

// ---- datagen ----

fn cmd_datagen(out_dir: &Path, cfg: &CorpusConfig) -> Result<(Value, String)> {
    let manifest = datagen::generate_corpus(out_dir, cfg)?;
    let payload = json!({
        "out_dir": out_dir.display().to_string(),
        "files": manifest.entries.len(),
        "manifest": out_dir.join("manifest.csv").display().to_string(),
    });
    let text = format!(
        "Synthetic corpus\n  directory : {}\n  files     : {}\n  manifest  : {}\n",
        out_dir.display(),
        manifest.entries.len(),
        out_dir.join("manifest.csv").display()
    );
    Ok((payload, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig4_rounds_to_four_significant_digits() {
        assert_eq!(sig4(0.915), "0.9150");
        assert_eq!(sig4(1.046), "1.046");
        assert_eq!(sig4(-0.005123), "-0.005123");
        assert_eq!(sig4(12345.6), "12350");
        assert_eq!(sig4(0.0), "0");
    }

    #[test]
    fn help_exits_zero_and_unknown_flag_exits_one() {
        assert_eq!(run_with_args(["bens", "--help"]), 0);
        assert_eq!(run_with_args(["bens", "--definitely-not-a-flag"]), 1);
        assert_eq!(run_with_args(["bens", "conformity"]), 1); // missing --manifest
    }

    #[test]
    fn missing_manifest_file_is_a_data_error() {
        assert_eq!(
            run_with_args(["bens", "conformity", "--manifest", "/nope/missing.csv"]),
            2
        );
    }
}
