//! JSON run configs and the commands behind the `mvlatent` binary.
//!
//! Every command is a plain function so that runs can be scripted from Rust
//! as well as from the shell. [`main_with_args`] parses arguments, runs the
//! command and maps errors to exit codes.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::datasets::{self, load_dataset, load_idx, load_idx_labels, make_noisy_mnist, save_dataset, Split, SplitSizes, SynthConfig, TwoViewDataset};
use crate::error::{Error, Result};
use crate::evaluation::{
    extract_features, orthogonality_score, private_traversal_grid, reconstruct_grid, select_linear_classifier, FeatureSource, SvmConfig, C_GRID,
};
use crate::objectives::{ModelConfig, ObjectiveKind};
use crate::rng::RngState;
use crate::tensor::Tensor;
use crate::training::{load_checkpoint, save_checkpoint, Checkpoint, TrainConfig, Trainer, METRICS_HEADER};

pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const EVAL_REPORT_FILE: &str = "eval.json";
pub const SWEEP_FILE: &str = "sweep_mu.csv";
pub const THREADS_ENV: &str = "MVLATENT_THREADS";
pub const DEFAULT_MU_LIST: [f64; 4] = [1.0, 0.8, 0.5, 0.2];

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Where the two views come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// Generated glyph dataset.
    Synthetic(SynthConfig),
    /// A directory written by `gen-data`.
    Directory { path: PathBuf },
    /// IDX image and label files (concatenated in order) paired by the noisy-MNIST recipe.
    Idx {
        images: Vec<PathBuf>,
        labels: Vec<PathBuf>,
        #[serde(default)]
        seed: u64,
        #[serde(default = "mnist_sizes")]
        sizes: SplitSizes,
    },
}

fn mnist_sizes() -> SplitSizes {
    SplitSizes::MNIST
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Synthetic(SynthConfig::default())
    }
}

/// Downstream evaluation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Candidate hinge weights `C`, chosen on the tune split.
    #[serde(default = "default_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_features")]
    pub features: Vec<FeatureSource>,
    /// Adds the raw view-1 baseline row.
    #[serde(default = "yes")]
    pub include_raw: bool,
    #[serde(default)]
    pub svm: SvmConfig,
}

fn default_grid() -> Vec<f64> {
    C_GRID.to_vec()
}
fn default_features() -> Vec<FeatureSource> {
    vec![FeatureSource::ZFromX]
}
fn yes() -> bool {
    true
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { c_grid: default_grid(), features: default_features(), include_raw: true, svm: SvmConfig::default() }
    }
}

fn default_model() -> ModelConfig {
    ModelConfig::new(ObjectiveKind::Vcca)
}

/// One experiment. Unknown keys are rejected; every default is written
/// out in the resolved copy stored with each run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Run directory, unless `--out` is given.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            model: default_model(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let DataConfig::Synthetic(s) = &self.data {
            s.validate()?;
        }
        if let DataConfig::Idx { images, labels, .. } = &self.data {
            if images.is_empty() || images.len() != labels.len() {
                return Err(Error::Config("idx data needs matching, nonempty image and label file lists".into()));
            }
        }
        self.train.validate()?;
        if self.eval.c_grid.is_empty() || self.eval.c_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::Config("eval.c_grid needs positive finite values".into()));
        }
        Ok(())
    }

    /// Applies `--seed`: the training seed for every command, and the data
    /// seed for `gen-data`.
    pub fn with_seed(mut self, seed: Option<u64>, data_too: bool) -> RunConfig {
        if let Some(s) = seed {
            self.train.seed = s;
            self.eval.svm.seed = s;
            if data_too {
                match &mut self.data {
                    DataConfig::Synthetic(c) => c.seed = s,
                    DataConfig::Idx { seed, .. } => *seed = s,
                    DataConfig::Directory { .. } => {}
                }
            }
        }
        self
    }

    pub fn to_pretty_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds or loads the dataset described by `cfg`.
pub fn load_data(cfg: &DataConfig) -> Result<TwoViewDataset> {
    let ds = match cfg {
        DataConfig::Synthetic(s) => datasets::generate_two_view(s)?,
        DataConfig::Directory { path } => load_dataset(path)?,
        DataConfig::Idx { images, labels, seed, sizes } => {
            let mut pixels = Vec::new();
            let mut all_labels = Vec::new();
            let mut width = None;
            for (img, lab) in images.iter().zip(labels) {
                let t = load_idx(img)?;
                let n = t.shape()[0];
                let d = t.numel() / n.max(1);
                if *width.get_or_insert(d) != d {
                    return Err(Error::Config(format!("{} has {d} pixels per image, expected {}", img.display(), width.unwrap_or(d))));
                }
                pixels.extend_from_slice(t.data());
                all_labels.extend(load_idx_labels(lab)?);
            }
            let d = width.unwrap_or(0);
            let n = if d == 0 { 0 } else { pixels.len() / d };
            make_noisy_mnist(&Tensor::from_vec(&[n, d], pixels)?, &all_labels, *seed, *sizes)?
        }
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes the configured dataset to `out`.
pub fn cmd_gen_data(cfg: &RunConfig, out: &Path) -> Result<TwoViewDataset> {
    let ds = load_data(&cfg.data)?;
    save_dataset(out, &ds)?;
    log::info!("wrote {} samples to {}", ds.len(), out.display());
    Ok(ds)
}

fn write_resolved(cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(RESOLVED_CONFIG_FILE), cfg.to_pretty_json()? + "\n")?;
    Ok(())
}

/// Metrics lines of an earlier run in `dir` that precede `epoch`.
fn earlier_metrics(dir: &Path, epoch: usize) -> Result<Vec<String>> {
    let path = dir.join(METRICS_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut kept = Vec::new();
    for line in BufReader::new(fs::File::open(path)?).lines().skip(1) {
        let line = line?;
        let e: usize = line
            .split(',')
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Config(format!("unreadable metrics line {line:?}")))?;
        if e < epoch {
            kept.push(line);
        }
    }
    Ok(kept)
}

/// Trains on the train split into `run_dir`: `config.resolved.json`,
/// `metrics.csv` (written as training goes) and `checkpoint/`. With
/// `resume`, training continues from that checkpoint; rows of an earlier
/// `metrics.csv` in `run_dir` up to the resume point are kept, so the file
/// matches an uninterrupted run.
pub fn cmd_train(cfg: &RunConfig, run_dir: &Path, resume: Option<&Path>) -> Result<Checkpoint> {
    cfg.validate()?;
    let ds = load_data(&cfg.data)?;
    let train = ds.split(Split::Train)?;
    let (dx, dy) = (train.x.last_dim(), train.y.last_dim());
    let mut trainer = match resume {
        Some(dir) => {
            let ck = load_checkpoint(dir)?;
            if ck.model != cfg.model || (ck.d_x, ck.d_y) != (dx, dy) {
                return Err(Error::Config(format!("checkpoint {} does not match the configured model and data", dir.display())));
            }
            Trainer::resume(ck, cfg.train.clone())?
        }
        None => Trainer::new(&cfg.model, cfg.train.clone(), dx, dy)?,
    };
    let mut resolved = cfg.clone();
    resolved.train = trainer.config().clone();
    resolved.out = Some(run_dir.to_path_buf());
    write_resolved(&resolved, run_dir)?;
    let earlier = if resume.is_some() { earlier_metrics(run_dir, trainer.epoch())? } else { Vec::new() };
    let mut metrics = std::io::BufWriter::new(fs::File::create(run_dir.join(METRICS_FILE))?);
    writeln!(metrics, "{METRICS_HEADER}")?;
    for line in earlier {
        writeln!(metrics, "{line}")?;
    }
    metrics.flush()?;
    let ck_dir = run_dir.join(CHECKPOINT_DIR);
    let every = cfg.train.eval_every;
    let mut written = 0;
    let result = trainer.fit(&train.x, &train.y, |t| {
        let rows = &t.metrics()[written..];
        for r in rows {
            writeln!(metrics, "{}", r.csv_line())?;
        }
        metrics.flush()?;
        written = t.metrics().len();
        let mean = rows.iter().map(|r| r.terms.total).sum::<f64>() / rows.len().max(1) as f64;
        log::info!("epoch {} mean objective {mean:.4}", t.epoch());
        if every > 0 && t.epoch() % every == 0 && t.epoch() < t.config().epochs {
            save_checkpoint(&ck_dir, &t.checkpoint())?;
        }
        Ok(())
    });
    if let Err(e) = result {
        for r in &trainer.metrics()[written..] {
            writeln!(metrics, "{}", r.csv_line())?;
        }
        metrics.flush()?;
        return Err(e);
    }
    let ck = trainer.checkpoint();
    save_checkpoint(&ck_dir, &ck)?;
    log::info!("saved {}", ck_dir.display());
    Ok(ck)
}

/// One feature source scored by a tuned linear classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub features: FeatureSource,
    pub c: f64,
    pub tune_error: f64,
    /// Test-split classification error.
    pub error_rate: f64,
}

/// Orthogonality between shared and private tune-split features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orthogonality {
    pub z_hx: Option<f64>,
    pub z_hy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: ObjectiveKind,
    /// Test error of the first learned feature source (raw if there is none).
    pub error_rate: f64,
    pub results: Vec<EvalRow>,
    pub orthogonality: Option<Orthogonality>,
}

/// Linear-classifier error for each configured feature source: `C` chosen
/// on the tune split, error measured on the test split.
pub fn evaluate_bundle(cfg: &RunConfig, ck: &Checkpoint, ds: &TwoViewDataset) -> Result<EvalReport> {
    let split = |s| -> Result<(datasets::SplitView, Vec<usize>)> {
        let v = ds.split(s)?;
        let l = v.labels.clone().ok_or_else(|| Error::Config("evaluation needs a labeled dataset".into()))?;
        Ok((v, l))
    };
    let (train, tune, test) = (split(Split::Train)?, split(Split::Tune)?, split(Split::Test)?);
    let mut sources = cfg.eval.features.clone();
    if cfg.eval.include_raw && !sources.contains(&FeatureSource::Raw) {
        sources.push(FeatureSource::Raw);
    }
    let mut results = Vec::new();
    for &which in &sources {
        let f = |(v, _): &(datasets::SplitView, Vec<usize>)| extract_features(&ck.bundle, &v.x, &v.y, which);
        let (ftr, ftu, fte) = (f(&train)?, f(&tune)?, f(&test)?);
        let sel = select_linear_classifier((&ftr.values, &train.1), (&ftu.values, &tune.1), &cfg.eval.c_grid, &cfg.eval.svm)?;
        let error_rate = crate::evaluation::classification_error(&sel.classifier, &fte.values, &test.1)?;
        log::info!("{}: C = {}, tune error {:.4}, test error {error_rate:.4}", which.name(), sel.c, sel.tune_error);
        results.push(EvalRow { features: which, c: sel.c, tune_error: sel.tune_error, error_rate });
    }
    let error_rate = results
        .iter()
        .find(|r| r.features != FeatureSource::Raw)
        .or(results.first())
        .map(|r| r.error_rate)
        .ok_or_else(|| Error::Config("eval.features is empty".into()))?;
    let orthogonality = if ck.bundle.kind.has_private() {
        let (v, _) = &tune;
        let z = extract_features(&ck.bundle, &v.x, &v.y, FeatureSource::ZFromX)?;
        let score = |h: FeatureSource, d: usize| -> Result<Option<f64>> {
            if d == 0 {
                return Ok(None);
            }
            let h = extract_features(&ck.bundle, &v.x, &v.y, h)?;
            orthogonality_score(&z.values, &h.values).map(Some)
        };
        Some(Orthogonality { z_hx: score(FeatureSource::Hx, ck.bundle.d_hx)?, z_hy: score(FeatureSource::Hy, ck.bundle.d_hy)? })
    } else {
        None
    };
    Ok(EvalReport { kind: ck.bundle.kind, error_rate, results, orthogonality })
}

/// Loads a checkpoint and evaluates it on the configured dataset.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path) -> Result<EvalReport> {
    let ck = load_checkpoint(checkpoint)?;
    let ds = load_data(&cfg.data)?;
    evaluate_bundle(cfg, &ck, &ds)
}

fn first_test_rows(ds: &TwoViewDataset, rows: usize) -> Result<(Tensor, Tensor)> {
    let idx = ds.splits.get(Split::Test);
    if rows == 0 || idx.len() < rows {
        return Err(Error::Config(format!("need {rows} test samples, have {}", idx.len())));
    }
    Ok((ds.x.select_rows(&idx[..rows])?, ds.y.select_rows(&idx[..rows])?))
}

/// Reconstruction grid of the first `rows` test samples, written as PGM.
pub fn cmd_reconstruct(cfg: &RunConfig, checkpoint: &Path, out: &Path, rows: usize, seed: u64) -> Result<()> {
    let ck = load_checkpoint(checkpoint)?;
    let (x, y) = first_test_rows(&load_data(&cfg.data)?, rows)?;
    reconstruct_grid(&ck.bundle, &x, &y, &mut RngState::new(seed))?.write_pgm(out)
}

/// Private-variable traversal grid from the first `rows` test samples, written as PGM.
pub fn cmd_traverse(cfg: &RunConfig, checkpoint: &Path, out: &Path, rows: usize, seed: u64) -> Result<()> {
    let ck = load_checkpoint(checkpoint)?;
    let (x, _) = first_test_rows(&load_data(&cfg.data)?, rows)?;
    private_traversal_grid(&ck.bundle, &x, rows, &mut RngState::new(seed))?.write_pgm(out)
}

/// One row of the mu sweep. Metrics are classification accuracies of the
/// first learned feature source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub tune_metric: f64,
    pub test_metric: f64,
}

pub const SWEEP_HEADER: &str = "mu,tune_metric,test_metric";

/// Trains one bidirectional model per `mu` (same seed) into `out/mu_<mu>/`,
/// evaluates each, and writes `out/sweep_mu.csv`.
pub fn cmd_sweep_mu(cfg: &RunConfig, out: &Path, mus: &[f64]) -> Result<Vec<SweepRow>> {
    if !cfg.model.kind.is_bidirectional() {
        return Err(Error::Config(format!("sweep-mu needs a bidirectional model, got {:?}", cfg.model.kind)));
    }
    if mus.is_empty() {
        return Err(Error::Config("empty mu list".into()));
    }
    let ds = load_data(&cfg.data)?;
    let mut rows = Vec::new();
    for &mu in mus {
        let mut c = cfg.clone();
        c.train.objective.mu = mu;
        c.validate()?;
        let dir = out.join(format!("mu_{mu}"));
        let ck = cmd_train(&c, &dir, None)?;
        let report = evaluate_bundle(&c, &ck, &ds)?;
        let row = report
            .results
            .iter()
            .find(|r| r.features != FeatureSource::Raw)
            .ok_or_else(|| Error::Config("sweep-mu needs a learned feature source in eval.features".into()))?;
        rows.push(SweepRow { mu, tune_metric: 1.0 - row.tune_error, test_metric: 1.0 - row.error_rate });
    }
    let mut text = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        text += &format!("{},{},{}\n", r.mu, r.tune_metric, r.test_metric);
    }
    fs::create_dir_all(out)?;
    fs::write(out.join(SWEEP_FILE), text)?;
    Ok(rows)
}

/// Exit status for an error: 2 config, 3 numerical abort, 4 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericalAbort { .. } | Error::NonFinite { .. } | Error::Backward(_) => EXIT_NUMERICAL,
        Error::Io(_) | Error::Idx(_) | Error::Checkpoint(_) => EXIT_IO,
        Error::Config(_) | Error::InvalidArgument(_) | Error::Shape { .. } | Error::Json(_) => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser)]
#[command(name = "mvlatent", version, about = "Multi-view variational latent-variable models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run config; defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (or image file for grid commands).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint directory to resume from or evaluate.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Rows of the grid (and columns, for traversals).
    #[arg(long, default_value_t = 8)]
    pub rows: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated mu values.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_MU_LIST)]
    pub mu: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or convert a dataset into a directory.
    GenData(CommonArgs),
    /// Train a model into a run directory.
    Train(CommonArgs),
    /// Linear-classifier evaluation of a checkpoint.
    Eval(CommonArgs),
    /// Reconstruction grid (input, mean, stddev) as PGM.
    Reconstruct(GridArgs),
    /// Private-variable traversal grid as PGM.
    Traverse(GridArgs),
    /// Train and evaluate across bidirectional weights mu.
    SweepMu(SweepArgs),
}

/// The config named by `--config`, else the resolved config stored next
/// to `--checkpoint`, else defaults.
fn resolve_config(a: &CommonArgs, data_seed: bool) -> Result<RunConfig> {
    let stored = a.checkpoint.as_ref().and_then(|c| c.parent()).map(|d| d.join(RESOLVED_CONFIG_FILE));
    let cfg = match (&a.config, stored) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(p)) if p.exists() => RunConfig::load(&p)?,
        _ => RunConfig::default(),
    };
    Ok(cfg.with_seed(a.seed, data_seed))
}

fn need_out(a: &CommonArgs, cfg: &RunConfig) -> Result<PathBuf> {
    a.out.clone().or_else(|| cfg.out.clone()).ok_or_else(|| Error::Config("no output location: pass --out or set `out`".into()))
}

fn need_checkpoint(a: &CommonArgs) -> Result<&Path> {
    a.checkpoint.as_deref().ok_or_else(|| Error::Config("--checkpoint is required".into()))
}

/// Caps the rayon pool at `MVLATENT_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("thread pool already initialized");
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::GenData(a) => {
            let cfg = resolve_config(&a, true)?;
            cmd_gen_data(&cfg, &need_out(&a, &cfg)?).map(|_| ())
        }
        Command::Train(a) => {
            let cfg = resolve_config(&a, false)?;
            cmd_train(&cfg, &need_out(&a, &cfg)?, a.checkpoint.as_deref()).map(|_| ())
        }
        Command::Eval(a) => {
            let cfg = resolve_config(&a, false)?;
            let report = cmd_eval(&cfg, need_checkpoint(&a)?)?;
            let text = serde_json::to_string_pretty(&report)?;
            println!("{text}");
            if let Some(dir) = &a.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(EVAL_REPORT_FILE), text + "\n")?;
            }
            Ok(())
        }
        Command::Reconstruct(g) => {
            let cfg = resolve_config(&g.common, false)?;
            let out = g.common.out.clone().ok_or_else(|| Error::Config("--out FILE.pgm is required".into()))?;
            cmd_reconstruct(&cfg, need_checkpoint(&g.common)?, &out, g.rows, cfg.train.seed)
        }
        Command::Traverse(g) => {
            let cfg = resolve_config(&g.common, false)?;
            let out = g.common.out.clone().ok_or_else(|| Error::Config("--out FILE.pgm is required".into()))?;
            cmd_traverse(&cfg, need_checkpoint(&g.common)?, &out, g.rows, cfg.train.seed)
        }
        Command::SweepMu(s) => {
            let cfg = resolve_config(&s.common, false)?;
            let rows = cmd_sweep_mu(&cfg, &need_out(&s.common, &cfg)?, &s.mu)?;
            println!("{SWEEP_HEADER}");
            for r in rows {
                println!("{},{},{}", r.mu, r.tune_metric, r.test_metric);
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
