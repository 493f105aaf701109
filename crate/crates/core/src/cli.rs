//! Command-line front end: `fit`, `score`, `eval`, `bench`, `sweep`, `synth`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::bench::{bench_inference, ExecutionMode};
use crate::dataio::{self, archive, MatrixFormat};
use crate::detector::{ComboodDetector, DetectorConfig};
use crate::error::{Error, Result};
use crate::knn::{DEFAULT_K, KD_EPS};
use crate::mahalanobis::{MahalanobisModel, DEFAULT_REG_C};
use crate::matrix::FeatureMatrix;
use crate::metrics;
use crate::synth::{self, ScenarioSpec};
use crate::transform::FittedTransform;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const DEFAULT_SWEEP_GRID: [f64; 7] = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e6];

#[derive(Debug, Parser)]
#[command(name = "combood", version, about = "Semiparametric OOD detection toolkit")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Worker threads for batch work (falls back to COMBOOD_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a detector on ID training features and write a .combood archive.
    Fit(FitArgs),
    /// Score paired test features with a fitted detector.
    Score(ScoreArgs),
    /// Compute AUROC/AUPR/FPR@TPR from ID and OOD score tables.
    Eval(EvalArgs),
    /// Time per-sample inference.
    Bench(BenchArgs),
    /// AUROC of the Mahalanobis component alone across regularization values.
    Sweep(SweepArgs),
    /// Generate a seeded synthetic scenario.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = DEFAULT_REG_C, allow_negative_numbers = true)]
    pub reg_c: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 0.95)]
    pub target_tpr: f64,
    #[arg(long, default_value_t = KD_EPS)]
    pub clamp_eps: f64,
}

impl ConfigArgs {
    pub fn to_config(&self) -> DetectorConfig {
        DetectorConfig {
            reg_c: self.reg_c,
            k: self.k,
            target_tpr: self.target_tpr,
            clamp_eps: self.clamp_eps,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub train_extrema: PathBuf,
    pub train_embed: PathBuf,
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Fraction of paired training rows (the trailing ones) held out to calibrate the threshold; 0 disables.
    #[arg(long, default_value_t = 0.1)]
    pub calibrate_split: f64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub detector: PathBuf,
    pub test_extrema: PathBuf,
    pub test_embed: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub id_scores: PathBuf,
    pub ood_scores: PathBuf,
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub tpr: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub detector: PathBuf,
    pub test_extrema: PathBuf,
    pub test_embed: PathBuf,
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Evaluate the two components on separate tasks.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub train_extrema: PathBuf,
    pub id_extrema: PathBuf,
    pub ood_extrema: PathBuf,
    pub out: PathBuf,
    /// Comma-separated regularization values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c_values: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub dim_extrema: usize,
    #[arg(long, default_value_t = 16)]
    pub dim_embed: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_id_test: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_ood_test: usize,
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    pub shift: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cov_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SynthArgs {
    pub fn to_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            dim_extrema: self.dim_extrema,
            dim_embed: self.dim_embed,
            n_train: self.n_train,
            n_id_test: self.n_id_test,
            n_ood_test: self.n_ood_test,
            ood_mean_shift: self.shift,
            ood_cov_scale: self.cov_scale,
            seed: self.seed,
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Score(a) => cmd_score(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
    })
}

/// `--threads`, else `COMBOOD_THREADS`, else 0 (rayon picks all cores).
fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("COMBOOD_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("COMBOOD_THREADS={v:?} is not a count"))),
        Err(_) => Ok(0),
    }
}

fn load(path: &Path) -> Result<FeatureMatrix> {
    dataio::load_matrix(path, MatrixFormat::from_path(path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let config = a.config.to_config();
    config.validate()?;
    if !(0.0..1.0).contains(&a.calibrate_split) {
        return Err(Error::InvalidConfig(format!(
            "--calibrate-split must lie in [0, 1), got {}",
            a.calibrate_split
        )));
    }
    eprintln!(
        "config: reg_c={} k={} target_tpr={} clamp_eps={:e} calibrate_split={}",
        config.reg_c, config.k, config.target_tpr, config.clamp_eps, a.calibrate_split
    );

    let extrema = load(&a.train_extrema)?;
    let embed = load(&a.train_embed)?;
    let detector = fit_with_calibration(&extrema, &embed, config, a.calibrate_split)?;
    archive::save_detector(&detector, &a.out)?;
    eprintln!(
        "fitted: extrema dim {}, embedding dim {}, threshold {}",
        detector.extrema_dim(),
        detector.n_embed(),
        detector
            .threshold()
            .map_or_else(|| "unset".to_string(), |t| t.to_string())
    );
    Ok(())
}

/// Fits on all but the trailing `split` fraction of paired rows and
/// calibrates the threshold on the held-out rows. `split == 0` fits on
/// everything and leaves the threshold unset.
pub fn fit_with_calibration(
    extrema: &FeatureMatrix,
    embed: &FeatureMatrix,
    config: DetectorConfig,
    split: f64,
) -> Result<ComboodDetector> {
    if split == 0.0 {
        return ComboodDetector::fit(extrema, embed, config);
    }
    if extrema.rows() != embed.rows() {
        return Err(Error::dims(
            "calibration hold-out needs paired training rows (use --calibrate-split 0 for unpaired files)",
            extrema.rows(),
            embed.rows(),
        ));
    }
    let n = extrema.rows();
    let held = (split * n as f64).floor() as usize;
    let fit_idx: Vec<usize> = (0..n - held).collect();
    let cal_idx: Vec<usize> = (n - held..n).collect();
    if held == 0 || fit_idx.is_empty() {
        return Err(Error::TooFewRows {
            context: format!("calibration split {split}"),
            needed: 1,
            got: held.min(fit_idx.len()),
        });
    }
    let mut detector = ComboodDetector::fit(
        &extrema.select_rows(&fit_idx)?,
        &embed.select_rows(&fit_idx)?,
        config,
    )?;
    let cal = detector.score_batch(&extrema.select_rows(&cal_idx)?, &embed.select_rows(&cal_idx)?)?;
    let scores: Vec<f64> = cal.iter().map(|s| s.score).collect();
    let t = detector.calibrate(&scores)?;
    info!("calibrated threshold {t} on {held} held-out rows");
    Ok(detector)
}

pub fn cmd_score(a: &ScoreArgs) -> Result<()> {
    let detector = archive::load_detector(&a.detector)?;
    let extrema = load(&a.test_extrema)?;
    let embed = load(&a.test_embed)?;
    eprintln!(
        "config: detector={} threads={}",
        a.detector.display(),
        rayon::current_num_threads()
    );
    let scores = detector.score_batch(&extrema, &embed)?;
    let ids: Vec<String> = (0..extrema.rows()).map(|i| extrema.row_id(i)).collect();
    let decisions = match detector.threshold() {
        Some(_) => Some(
            scores
                .iter()
                .map(|s| detector.decide(s))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => {
            warn!("detector is uncalibrated; decision column omitted");
            eprintln!("warning: detector is uncalibrated; decision column omitted");
            None
        }
    };
    let mut w = create(&a.out)?;
    dataio::write_scores(&mut w, &ids, &scores, decisions.as_deref())?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    eprintln!("config: tpr={}", a.tpr);
    let id = dataio::read_score_file(&a.id_scores, "score")?;
    let ood = dataio::read_score_file(&a.ood_scores, "score")?;
    let report = metrics::evaluate(&id, &ood, a.tpr)?;
    write_json(&a.out, &report)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let mode = if a.parallel {
        ExecutionMode::Parallel
    } else {
        ExecutionMode::Serial
    };
    eprintln!("config: repeats={} mode={mode:?}", a.repeats);
    let detector = archive::load_detector(&a.detector)?;
    let extrema = load(&a.test_extrema)?;
    let embed = load(&a.test_embed)?;
    let report = bench_inference(&detector, &extrema, &embed, a.repeats, mode)?;
    write_json(&a.out, &report)
}

/// One row of a regularization sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub reg_c: f64,
    pub auroc: f64,
}

/// AUROC of the parametric confidence alone for each regularization value.
pub fn regularization_sweep(
    train_extrema: &FeatureMatrix,
    id_extrema: &FeatureMatrix,
    ood_extrema: &FeatureMatrix,
    c_values: &[f64],
) -> Result<Vec<SweepRow>> {
    if c_values.is_empty() {
        return Err(Error::InvalidConfig("no regularization values given".into()));
    }
    if let Some(c) = c_values.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "regularization values must be finite and >= 0, got {c}"
        )));
    }
    let transform = FittedTransform::fit(train_extrema)?;
    let train = transform.apply(train_extrema)?;
    let id = transform.apply(id_extrema)?;
    let ood = transform.apply(ood_extrema)?;
    c_values
        .iter()
        .map(|&c| {
            let model = MahalanobisModel::fit(&train, c)?;
            let score = |m: &FeatureMatrix| -> Result<Vec<f64>> {
                m.iter_rows()
                    .map(|r| Ok(model.confidence(model.distance(r)?)))
                    .collect()
            };
            Ok(SweepRow {
                reg_c: c,
                auroc: metrics::auroc(&score(&id)?, &score(&ood)?)?,
            })
        })
        .collect()
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let grid = a.c_values.clone().unwrap_or_else(|| DEFAULT_SWEEP_GRID.to_vec());
    eprintln!("config: c_values={grid:?}");
    let rows = regularization_sweep(
        &load(&a.train_extrema)?,
        &load(&a.id_extrema)?,
        &load(&a.ood_extrema)?,
        &grid,
    )?;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(["c", "auroc"])?;
    for r in rows {
        w.write_record([format!("{:?}", r.reg_c), format!("{:?}", r.auroc)])?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let spec = a.to_spec();
    spec.validate()?;
    eprintln!("config: {}", serde_json::to_string(&spec)?);
    let scenario = synth::generate(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut files = Vec::new();
    for (stem, m) in scenario.named() {
        let name = format!("{stem}.npy");
        dataio::save_matrix(a.out_dir.join(&name), m, MatrixFormat::Npy)?;
        files.push(name);
    }
    let manifest = serde_json::json!({ "spec": spec, "files": files });
    write_json(&a.out_dir.join("manifest.json"), &manifest)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
