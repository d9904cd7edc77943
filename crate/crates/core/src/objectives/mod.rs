//! Training losses for every model variant.
//!
//! Each loss is the negative objective averaged over the minibatch and is
//! returned together with an [`ElboTerms`] breakdown. Reconstruction terms
//! are per-sample means of the observation log-likelihood (nats), KL terms are
//! per-sample means of the divergence to the standard-normal prior, and
//! `total = -sum(kl) + w_x * rec_x + w_y * rec_y = -loss`.

mod baselines;
mod bundle;
mod vcca;

pub use baselines::{contrastive_loss, mvae_loss, mvae_var_loss};
pub use bundle::{network_specs, BoundBundle, ModelBundle, ModelConfig, SLOTS};
pub use vcca::{bi_vcca_loss, vcca_loss, vcca_private_loss};

use serde::{Deserialize, Serialize};

use crate::distributions::LOG_SIGMA_RANGE;
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ObjectiveKind {
    Vcca,
    VccaPrivate,
    BiVcca,
    BiVccaPrivate,
    Mvae,
    MvaeVar,
    Contrastive,
}

impl ObjectiveKind {
    pub fn has_private(self) -> bool {
        matches!(self, ObjectiveKind::VccaPrivate | ObjectiveKind::BiVccaPrivate)
    }

    pub fn is_bidirectional(self) -> bool {
        matches!(self, ObjectiveKind::BiVcca | ObjectiveKind::BiVccaPrivate)
    }

    pub fn is_variational(self) -> bool {
        matches!(
            self,
            ObjectiveKind::Vcca | ObjectiveKind::VccaPrivate | ObjectiveKind::BiVcca | ObjectiveKind::BiVccaPrivate
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Monte-Carlo samples per data point.
    #[serde(default = "one")]
    pub samples: usize,
    /// Weight of the x-conditioned bound in the bidirectional objectives.
    #[serde(default = "unit")]
    pub mu: f64,
    /// Likelihood weights `(w_x, w_y)`.
    #[serde(default = "unit_pair")]
    pub view_weights: (f64, f64),
    #[serde(default)]
    pub dropout_rate: f64,
    /// Contrastive margin.
    #[serde(default = "half")]
    pub margin: f64,
    /// Clamp range for posterior log standard deviations.
    #[serde(default = "log_sigma_range")]
    pub log_sigma_range: (f64, f64),
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn unit_pair() -> (f64, f64) {
    (1.0, 1.0)
}
fn half() -> f64 {
    0.5
}
fn log_sigma_range() -> (f64, f64) {
    LOG_SIGMA_RANGE
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            samples: 1,
            mu: 1.0,
            view_weights: (1.0, 1.0),
            dropout_rate: 0.0,
            margin: 0.5,
            log_sigma_range: LOG_SIGMA_RANGE,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples (L) must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidArgument(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        let (wx, wy) = self.view_weights;
        if !(wx > 0.0 && wy > 0.0) {
            return Err(Error::Config(format!("view weights must be positive, got ({wx}, {wy})")));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout rate must be in [0, 1), got {}", self.dropout_rate)));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::Config(format!("margin must be nonnegative, got {}", self.margin)));
        }
        if !(self.log_sigma_range.0 <= self.log_sigma_range.1) {
            return Err(Error::Config("log_sigma_range must be ordered".into()));
        }
        Ok(())
    }
}

/// Itemized objective for one minibatch (per-sample means, nats).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElboTerms {
    pub kl_z: Option<f64>,
    pub kl_hx: Option<f64>,
    pub kl_hy: Option<f64>,
    pub rec_x: Option<f64>,
    pub rec_y: Option<f64>,
    /// Objective value; the loss is `-total`.
    pub total: f64,
}

impl ElboTerms {
    /// Convex combination `mu * a + (1 - mu) * b`, term by term.
    pub fn mix(mu: f64, a: &ElboTerms, b: &ElboTerms) -> ElboTerms {
        let m = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (None, None) => None,
            (x, y) => Some(mu * x.unwrap_or(0.0) + (1.0 - mu) * y.unwrap_or(0.0)),
        };
        ElboTerms {
            kl_z: m(a.kl_z, b.kl_z),
            kl_hx: m(a.kl_hx, b.kl_hx),
            kl_hy: m(a.kl_hy, b.kl_hy),
            rec_x: m(a.rec_x, b.rec_x),
            rec_y: m(a.rec_y, b.rec_y),
            total: mu * a.total + (1.0 - mu) * b.total,
        }
    }

    /// Recomputes `total` from the itemized terms.
    pub fn reconciled_total(&self, weights: (f64, f64)) -> f64 {
        let kl = self.kl_z.unwrap_or(0.0) + self.kl_hx.unwrap_or(0.0) + self.kl_hy.unwrap_or(0.0);
        -kl + weights.0 * self.rec_x.unwrap_or(0.0) + weights.1 * self.rec_y.unwrap_or(0.0)
    }
}

/// Paired views for one minibatch.
#[derive(Clone, Debug)]
pub struct Batch {
    pub x: Tensor,
    pub y: Tensor,
    /// Mismatched view-2 rows, one per sample (contrastive loss only).
    pub y_neg: Option<Tensor>,
}

impl Batch {
    pub fn new(x: Tensor, y: Tensor) -> Result<Batch> {
        let (sx, sy) = (x.shape(), y.shape());
        if sx.len() != 2 || sy.len() != 2 || sx[0] != sy[0] {
            return Err(Error::shape("batch", format!("x {sx:?} vs y {sy:?}")));
        }
        Ok(Batch { x, y, y_neg: None })
    }

    pub fn with_negatives(mut self, y_neg: Tensor) -> Result<Batch> {
        if y_neg.shape() != self.y.shape() {
            return Err(Error::shape("batch", format!("negatives {:?} vs y {:?}", y_neg.shape(), self.y.shape())));
        }
        self.y_neg = Some(y_neg);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scalar loss on the tape plus its breakdown.
#[derive(Clone, Debug)]
pub struct LossOutput {
    pub loss: Var,
    pub terms: ElboTerms,
    /// Per-bound breakdowns of the bidirectional kinds, x-conditioned first.
    /// Bounds with zero weight are not evaluated and are absent.
    pub parts: Vec<ElboTerms>,
}

/// Evaluates the loss matching `bundle.kind`.
pub fn loss(tape: &mut Tape, bundle: &BoundBundle, batch: &Batch, cfg: &ObjectiveConfig, rng: &mut RngState) -> Result<LossOutput> {
    match bundle.kind {
        ObjectiveKind::Vcca => vcca_loss(tape, bundle, batch, cfg, rng),
        ObjectiveKind::VccaPrivate => vcca_private_loss(tape, bundle, batch, cfg, rng),
        ObjectiveKind::BiVcca | ObjectiveKind::BiVccaPrivate => bi_vcca_loss(tape, bundle, batch, cfg, rng),
        ObjectiveKind::Mvae => mvae_loss(tape, bundle, batch, cfg, rng),
        ObjectiveKind::MvaeVar => mvae_var_loss(tape, bundle, batch, cfg, rng),
        ObjectiveKind::Contrastive => {
            let neg = batch
                .y_neg
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("contrastive loss needs negatives".into()))?;
            let f = &bundle.enc_zx;
            let g = BoundBundle::require(&bundle.enc_zy, "enc_zy")?;
            contrastive_loss(tape, f, g, &batch.x, &batch.y, neg, cfg.margin, cfg.dropout_rate, rng)
        }
    }
}

/// Convenience wrapper: binds `bundle` on a fresh tape, evaluates the loss,
/// and returns `(loss value, terms)`.
pub fn evaluate(bundle: &ModelBundle, batch: &Batch, cfg: &ObjectiveConfig, rng: &mut RngState) -> Result<(f64, ElboTerms)> {
    let mut tape = Tape::new();
    let bb = bundle.bind(&mut tape)?;
    let out = loss(&mut tape, &bb, batch, cfg, rng)?;
    Ok((tape.value(out.loss).item(), out.terms))
}
