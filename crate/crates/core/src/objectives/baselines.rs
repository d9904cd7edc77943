use super::{Batch, BoundBundle, ElboTerms, LossOutput, ObjectiveConfig, ObjectiveKind};
use crate::distributions::{bernoulli_log_lik, bernoulli_log_lik_logits};
use crate::error::{Error, Result};
use crate::networks::{BoundNetwork, Dropout, Head};
use crate::rng::RngState;
use crate::tensor::{Tape, Tensor, Var};

/// Norm offset of the cosine similarity.
pub const COSINE_EPS: f64 = 1e-12;

/// Summed `-1/2 |x - m|^2`.
fn neg_half_sq(tape: &mut Tape, x: Var, mean: Var) -> Result<Var> {
    if tape.shape(x) != tape.shape(mean) {
        return Err(Error::shape("autoencoder", format!("target {:?} vs output {:?}", tape.shape(x), tape.shape(mean))));
    }
    let d = tape.sub(x, mean)?;
    let sq = tape.square(d)?;
    let s = tape.sum(sq)?;
    tape.scale(s, -0.5)
}

/// Shared body of the autoencoder baselines. `bernoulli_y` switches the
/// view-2 term to the Bernoulli log-likelihood.
fn autoencoder(
    tape: &mut Tape,
    bundle: &BoundBundle,
    batch: &Batch,
    cfg: &ObjectiveConfig,
    rng: &mut RngState,
    bernoulli_y: bool,
) -> Result<LossOutput> {
    cfg.validate()?;
    let dec_x = BoundBundle::require(&bundle.dec_x, "dec_x")?;
    let dec_y = BoundBundle::require(&bundle.dec_y, "dec_y")?;
    if bernoulli_y && !matches!(dec_y.spec().head, Head::BernoulliMeans { .. }) {
        return Err(Error::InvalidArgument(format!("view-2 decoder needs a bernoulli head, got {:?}", dec_y.spec().head)));
    }
    let n = batch.len() as f64;
    let x = tape.constant(batch.x.clone())?;
    let y = tape.constant(batch.y.clone())?;
    let code = bundle.enc_zx.embed(tape, x, &mut Dropout::train(cfg.dropout_rate, &mut *rng)?)?;
    let px = dec_x.decode(tape, code, &mut Dropout::train(cfg.dropout_rate, &mut *rng)?)?;
    let rx = neg_half_sq(tape, x, px.mean)?;
    let py = dec_y.decode(tape, code, &mut Dropout::train(cfg.dropout_rate, &mut *rng)?)?;
    let ry = if bernoulli_y {
        match py.logits {
            Some(l) => bernoulli_log_lik_logits(tape, y, l)?,
            None => bernoulli_log_lik(tape, y, py.mean)?,
        }
    } else {
        neg_half_sq(tape, y, py.mean)?
    };
    let (wx, wy) = cfg.view_weights;
    let a = tape.scale(rx, -wx / n)?;
    let b = tape.scale(ry, -wy / n)?;
    let loss = tape.add(a, b)?;
    let mut terms = ElboTerms {
        rec_x: Some(tape.value(rx).item() / n),
        rec_y: Some(tape.value(ry).item() / n),
        ..Default::default()
    };
    terms.total = terms.reconciled_total(cfg.view_weights);
    Ok(LossOutput { loss, terms, parts: Vec::new() })
}

/// Multi-view autoencoder: `mean_i w_x/2 |x_i - g_x(f(x_i))|^2 + w_y/2 |y_i - g_y(f(x_i))|^2`.
///
/// `rec_x` and `rec_y` hold the per-sample means of `-1/2 |.|^2`.
pub fn mvae_loss(tape: &mut Tape, bundle: &BoundBundle, batch: &Batch, cfg: &ObjectiveConfig, rng: &mut RngState) -> Result<LossOutput> {
    if bundle.kind != ObjectiveKind::Mvae {
        return Err(Error::InvalidArgument(format!("mvae_loss on a {:?} bundle", bundle.kind)));
    }
    autoencoder(tape, bundle, batch, cfg, rng, false)
}

/// Autoencoder with a cross-entropy view-2 term: the view-2 squared error
/// is replaced by `-log p(y | g_y(f(x)))` under a Bernoulli decoder.
pub fn mvae_var_loss(tape: &mut Tape, bundle: &BoundBundle, batch: &Batch, cfg: &ObjectiveConfig, rng: &mut RngState) -> Result<LossOutput> {
    if bundle.kind != ObjectiveKind::MvaeVar {
        return Err(Error::InvalidArgument(format!("mvae_var_loss on a {:?} bundle", bundle.kind)));
    }
    autoencoder(tape, bundle, batch, cfg, rng, true)
}

/// Margin loss with cosine distance `dis(a, b) = 1 - cos(a, b)`:
/// `mean_i max(0, m + dis(f(x_i), g(y_i)) - dis(f(x_i), g(y_neg_i)))`.
///
/// Norms are offset by [`COSINE_EPS`] so zero embeddings are harmless.
#[allow(clippy::too_many_arguments)]
pub fn contrastive_loss(
    tape: &mut Tape,
    f: &BoundNetwork,
    g: &BoundNetwork,
    x: &Tensor,
    y: &Tensor,
    y_neg: &Tensor,
    margin: f64,
    dropout_rate: f64,
    rng: &mut RngState,
) -> Result<LossOutput> {
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("margin must be nonnegative, got {margin}")));
    }
    if y.shape() != y_neg.shape() || x.shape().first() != y.shape().first() {
        return Err(Error::shape(
            "contrastive_loss",
            format!("x {:?}, y {:?}, negatives {:?}", x.shape(), y.shape(), y_neg.shape()),
        ));
    }
    let n = x.shape()[0] as f64;
    let xv = tape.constant(x.clone())?;
    let yv = tape.constant(y.clone())?;
    let nv = tape.constant(y_neg.clone())?;
    let fx = f.embed(tape, xv, &mut Dropout::train(dropout_rate, &mut *rng)?)?;
    let gy = g.embed(tape, yv, &mut Dropout::train(dropout_rate, &mut *rng)?)?;
    let gn = g.embed(tape, nv, &mut Dropout::train(dropout_rate, &mut *rng)?)?;
    let pos = tape.row_cosine(fx, gy, COSINE_EPS)?;
    let neg = tape.row_cosine(fx, gn, COSINE_EPS)?;
    let diff = tape.sub(neg, pos)?;
    let shifted = tape.add_const(diff, margin)?;
    let hinge = tape.relu(shifted)?;
    let s = tape.sum(hinge)?;
    let loss = tape.scale(s, 1.0 / n)?;
    let terms = ElboTerms { total: -tape.value(loss).item(), ..Default::default() };
    Ok(LossOutput { loss, terms, parts: Vec::new() })
}
