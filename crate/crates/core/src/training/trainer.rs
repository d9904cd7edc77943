use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::checkpoint::{Checkpoint, RngCursor};
use crate::error::{Error, Result};
use crate::objectives::{self, Batch, ElboTerms, ModelBundle, ModelConfig, ObjectiveConfig, ObjectiveKind};
use crate::rng::RngState;
use crate::tensor::{Tape, Tensor};

pub const METRICS_HEADER: &str = "epoch,step,total,kl_z,kl_hx,kl_hy,rec_x,rec_y,wall_ms";

// Substream indices under the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_STEP: u64 = 2;
const STREAM_NEGATIVES: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    /// Checkpoint period in epochs; 0 writes only the final checkpoint.
    #[serde(default)]
    pub eval_every: usize,
    /// Rescales the gradient to at most this global L2 norm.
    #[serde(default)]
    pub clip_norm: Option<f64>,
    /// Fills the `wall_ms` metrics column. Off by default so that metrics
    /// files are reproducible byte for byte.
    #[serde(default)]
    pub log_wall_time: bool,
}

fn default_epochs() -> usize {
    50
}
fn default_batch() -> usize {
    100
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: default_epochs(),
            batch_size: default_batch(),
            seed: 0,
            optimizer: AdamConfig::default(),
            objective: ObjectiveConfig::default(),
            eval_every: 0,
            clip_norm: None,
            log_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip_norm must be positive, got {c}")));
            }
        }
        self.optimizer.validate()?;
        self.objective.validate()
    }
}

/// One logged training step. `terms` are measured on the step's minibatch
/// before the update.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub epoch: usize,
    pub step: u64,
    pub terms: ElboTerms,
    pub wall_ms: Option<f64>,
}

impl MetricRow {
    pub fn csv_line(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let t = &self.terms;
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.step,
            t.total,
            f(t.kl_z),
            f(t.kl_hx),
            f(t.kl_hy),
            f(t.rec_x),
            f(t.rec_y),
            f(self.wall_ms)
        );
        s
    }
}

/// Writes rows as CSV, with the header unless `header` is false.
pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[MetricRow], header: bool) -> Result<()> {
    if header {
        writeln!(w, "{METRICS_HEADER}")?;
    }
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Minibatch ADAM on one objective. All randomness derives from
/// `TrainConfig::seed`: the epoch permutation from `(epoch)`, and the noise
/// and dropout of a step from `(epoch, step within epoch)`, so a run resumed
/// at an epoch boundary replays the uninterrupted run exactly.
pub struct Trainer {
    bundle: ModelBundle,
    model: ModelConfig,
    d_x: usize,
    d_y: usize,
    adam: AdamState,
    cfg: TrainConfig,
    epoch: usize,
    step: u64,
    metrics: Vec<MetricRow>,
    started: Instant,
}

impl Trainer {
    /// Fresh parameters from the seed.
    pub fn new(model: &ModelConfig, cfg: TrainConfig, d_x: usize, d_y: usize) -> Result<Trainer> {
        cfg.validate()?;
        let bundle = ModelBundle::new(model, d_x, d_y, &RngState::new(cfg.seed).substream(STREAM_INIT))?;
        let adam = AdamState::new(cfg.optimizer, bundle.params());
        Ok(Trainer {
            bundle,
            model: model.clone(),
            d_x,
            d_y,
            adam,
            cfg,
            epoch: 0,
            step: 0,
            metrics: Vec::new(),
            started: Instant::now(),
        })
    }

    /// Continues from a checkpoint written at an epoch boundary. `cfg` may
    /// change `epochs`; the seed comes from the checkpoint.
    pub fn resume(ck: Checkpoint, mut cfg: TrainConfig) -> Result<Trainer> {
        let adam = ck
            .adam
            .ok_or_else(|| Error::Checkpoint("checkpoint has no optimizer state; cannot resume".into()))?;
        cfg.seed = ck.rng.seed;
        cfg.optimizer = adam.config;
        cfg.validate()?;
        Ok(Trainer {
            bundle: ck.bundle,
            model: ck.model,
            d_x: ck.d_x,
            d_y: ck.d_y,
            adam,
            cfg,
            epoch: ck.rng.epoch,
            step: ck.rng.step,
            metrics: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn bundle(&self) -> &ModelBundle {
        &self.bundle
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Completed updates.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Rows logged since construction.
    pub fn metrics(&self) -> &[MetricRow] {
        &self.metrics
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            d_x: self.d_x,
            d_y: self.d_y,
            bundle: self.bundle.clone(),
            train: Some(self.cfg.clone()),
            rng: RngCursor { seed: self.cfg.seed, epoch: self.epoch, step: self.step },
            adam: Some(self.adam.clone()),
        }
    }

    /// Runs one epoch over the rows of `x`/`y` in a seeded random order.
    pub fn run_epoch(&mut self, x: &Tensor, y: &Tensor) -> Result<()> {
        let n = x.rows();
        if n == 0 || y.rows() != n {
            return Err(Error::Config(format!("training data needs equal nonzero rows, got {n} and {}", y.rows())));
        }
        if self.cfg.batch_size > n {
            return Err(Error::Config(format!("batch_size {} exceeds {n} training samples", self.cfg.batch_size)));
        }
        let root = RngState::new(self.cfg.seed);
        let epoch = self.epoch as u64;
        let mut order: Vec<usize> = (0..n).collect();
        root.substream(STREAM_SHUFFLE).substream(epoch).shuffle(&mut order);
        let negatives = (self.bundle.kind == ObjectiveKind::Contrastive)
            .then(|| negative_partners(n, &mut root.substream(STREAM_NEGATIVES).substream(epoch)));
        let steps = root.substream(STREAM_STEP).substream(epoch);
        for (k, idx) in order.chunks(self.cfg.batch_size).enumerate() {
            let mut batch = Batch::new(x.select_rows(idx)?, y.select_rows(idx)?)?;
            if let Some(neg) = &negatives {
                let rows: Vec<usize> = idx.iter().map(|&i| neg[i]).collect();
                batch = batch.with_negatives(y.select_rows(&rows)?)?;
            }
            let mut rng = steps.substream(k as u64);
            let terms = self.update(&batch, &mut rng).map_err(|e| match e {
                Error::NonFinite { .. } | Error::Backward(_) => Error::NumericalAbort {
                    epoch: self.epoch,
                    step: self.step,
                    detail: e.to_string(),
                },
                other => other,
            })?;
            let wall_ms = self.cfg.log_wall_time.then(|| self.started.elapsed().as_secs_f64() * 1e3);
            self.metrics.push(MetricRow { epoch: self.epoch, step: self.step, terms, wall_ms });
            self.step += 1;
        }
        self.epoch += 1;
        Ok(())
    }

    fn update(&mut self, batch: &Batch, rng: &mut RngState) -> Result<ElboTerms> {
        let mut tape = Tape::new();
        let bound = self.bundle.bind(&mut tape)?;
        let out = objectives::loss(&mut tape, &bound, batch, &self.cfg.objective, rng)?;
        let value = tape.value(out.loss).item();
        if !value.is_finite() {
            return Err(Error::NumericalAbort {
                epoch: self.epoch,
                step: self.step,
                detail: format!("loss {value}, terms {:?}", out.terms),
            });
        }
        let grads = tape.backward(out.loss)?;
        let mut owned = bound
            .param_vars()
            .into_iter()
            .map(|v| grads.get(v).cloned().ok_or_else(|| Error::Backward("missing parameter gradient".into())))
            .collect::<Result<Vec<Tensor>>>()?;
        if let Some(c) = self.cfg.clip_norm {
            let norm = owned.iter().flat_map(|g| g.data()).map(|v| v * v).sum::<f64>().sqrt();
            if norm > c {
                let s = c / norm;
                owned = owned.iter().map(|g| g.map(|v| v * s)).collect();
            }
        }
        let refs: Vec<&Tensor> = owned.iter().collect();
        adam_step(&mut self.bundle.params_mut(), &refs, &mut self.adam)?;
        Ok(out.terms)
    }

    /// Trains until `config().epochs` epochs are complete, calling `on_epoch`
    /// after each one.
    pub fn fit(&mut self, x: &Tensor, y: &Tensor, mut on_epoch: impl FnMut(&Trainer) -> Result<()>) -> Result<()> {
        while self.epoch < self.cfg.epochs {
            self.run_epoch(x, y)?;
            on_epoch(self)?;
        }
        Ok(())
    }
}

/// One uniformly drawn partner per sample, never the sample itself.
fn negative_partners(n: usize, rng: &mut RngState) -> Vec<usize> {
    (0..n)
        .map(|i| {
            if n < 2 {
                return i;
            }
            let j = rng.below(n - 1);
            if j >= i {
                j + 1
            } else {
                j
            }
        })
        .collect()
}

/// Trains a fresh model on `x`/`y` and returns the final checkpoint and
/// the per-step metrics.
pub fn train(model: &ModelConfig, cfg: TrainConfig, x: &Tensor, y: &Tensor) -> Result<(Checkpoint, Vec<MetricRow>)> {
    let mut t = Trainer::new(model, cfg, x.last_dim(), y.last_dim())?;
    t.fit(x, y, |_| Ok(()))?;
    Ok((t.checkpoint(), t.metrics))
}
