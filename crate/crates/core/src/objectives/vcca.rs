use super::{Batch, BoundBundle, ElboTerms, LossOutput, ObjectiveConfig, ObjectiveKind};
use crate::distributions::{kl_to_standard_normal, reparameterize, DiagonalGaussian};
use crate::error::{Error, Result};
use crate::networks::Dropout;
use crate::rng::{sample_standard_normal, RngState};
use crate::tensor::{Tape, Var};

/// Which view the shared posterior conditions on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Condition {
    X,
    Y,
}

fn dropout<'r>(cfg: &ObjectiveConfig, rng: &'r mut RngState) -> Result<Dropout<'r>> {
    Dropout::train(cfg.dropout_rate, rng)
}

fn check_dims(bundle: &BoundBundle, batch: &Batch) -> Result<()> {
    let dx = batch.x.shape()[1];
    let dy = batch.y.shape()[1];
    if dx != bundle.obs_x.dim || dy != bundle.obs_y.dim {
        return Err(Error::shape(
            "objective",
            format!("batch views ({dx}, {dy}) vs model views ({}, {})", bundle.obs_x.dim, bundle.obs_y.dim),
        ));
    }
    Ok(())
}

/// Draws `L` reparameterized samples per row, stacked as `[L * n, d]`
/// (sample-major: rows `l * n .. (l + 1) * n` hold draw `l`).
fn sample_latent(tape: &mut Tape, q: &DiagonalGaussian, samples: usize, rng: &mut RngState) -> Result<Var> {
    let q = if samples > 1 {
        DiagonalGaussian {
            mu: tape.tile_rows(q.mu, samples)?,
            log_sigma: tape.tile_rows(q.log_sigma, samples)?,
        }
    } else {
        *q
    };
    let eps = sample_standard_normal(rng, tape.shape(q.mu));
    reparameterize(tape, &q, &eps)
}

fn tiled(tape: &mut Tape, v: Var, samples: usize) -> Result<Var> {
    if samples > 1 {
        tape.tile_rows(v, samples)
    } else {
        Ok(v)
    }
}

/// One variational bound, shared-only or shared+private depending on which
/// private encoders the bundle carries.
///
/// Random draws happen in a fixed order: shared encoder dropout, private
/// encoders' dropout, shared noise, private noise, decoder dropout (x then y).
fn single_bound(
    tape: &mut Tape,
    bundle: &BoundBundle,
    x: Var,
    y: Var,
    cond: Condition,
    cfg: &ObjectiveConfig,
    rng: &mut RngState,
) -> Result<(Var, ElboTerms)> {
    let n = tape.shape(x)[0];
    let samples = cfg.samples;
    let (enc_z, input) = match cond {
        Condition::X => (&bundle.enc_zx, x),
        Condition::Y => (BoundBundle::require(&bundle.enc_zy, "enc_zy")?, y),
    };
    let private_x = if bundle.d_hx > 0 {
        Some(BoundBundle::require(&bundle.enc_hx, "enc_hx")?)
    } else {
        None
    };
    let private_y = if bundle.d_hy > 0 {
        Some(BoundBundle::require(&bundle.enc_hy, "enc_hy")?)
    } else {
        None
    };
    let dec_x = BoundBundle::require(&bundle.dec_x, "dec_x")?;
    let dec_y = BoundBundle::require(&bundle.dec_y, "dec_y")?;

    let qz = enc_z.encode_with_range(tape, input, &mut dropout(cfg, rng)?, cfg.log_sigma_range)?;
    let qhx = private_x
        .map(|e| e.encode_with_range(tape, x, &mut dropout(cfg, rng)?, cfg.log_sigma_range))
        .transpose()?;
    let qhy = private_y
        .map(|e| e.encode_with_range(tape, y, &mut dropout(cfg, rng)?, cfg.log_sigma_range))
        .transpose()?;

    let kl_z = kl_to_standard_normal(tape, &qz)?;
    let kl_hx = qhx.as_ref().map(|q| kl_to_standard_normal(tape, q)).transpose()?;
    let kl_hy = qhy.as_ref().map(|q| kl_to_standard_normal(tape, q)).transpose()?;

    let z = sample_latent(tape, &qz, samples, rng)?;
    let hx = qhx.as_ref().map(|q| sample_latent(tape, q, samples, rng)).transpose()?;
    let hy = qhy.as_ref().map(|q| sample_latent(tape, q, samples, rng)).transpose()?;

    let in_x = match hx {
        Some(h) => tape.concat(&[z, h])?,
        None => z,
    };
    let in_y = match hy {
        Some(h) => tape.concat(&[z, h])?,
        None => z,
    };
    let x_t = tiled(tape, x, samples)?;
    let y_t = tiled(tape, y, samples)?;
    let px = dec_x.decode(tape, in_x, &mut dropout(cfg, rng)?)?;
    let ll_x = bundle.obs_x.log_lik(tape, x_t, &px)?;
    let py = dec_y.decode(tape, in_y, &mut dropout(cfg, rng)?)?;
    let ll_y = bundle.obs_y.log_lik(tape, y_t, &py)?;

    let mut kl = kl_z;
    for k in [kl_hx, kl_hy].into_iter().flatten() {
        kl = tape.add(kl, k)?;
    }
    let inv_n = 1.0 / n as f64;
    let inv_nl = 1.0 / (n * samples) as f64;
    let (wx, wy) = cfg.view_weights;
    let kl_mean = tape.scale(kl, inv_n)?;
    let rx = tape.scale(ll_x, wx * inv_nl)?;
    let ry = tape.scale(ll_y, wy * inv_nl)?;
    let rec = tape.add(rx, ry)?;
    let loss = tape.sub(kl_mean, rec)?;

    let val = |v: Var| tape.value(v).item();
    let mut terms = ElboTerms {
        kl_z: Some(val(kl_z) * inv_n),
        kl_hx: kl_hx.map(|k| val(k) * inv_n),
        kl_hy: kl_hy.map(|k| val(k) * inv_n),
        rec_x: Some(val(ll_x) * inv_nl),
        rec_y: Some(val(ll_y) * inv_nl),
        total: 0.0,
    };
    terms.total = terms.reconciled_total(cfg.view_weights);
    Ok((loss, terms))
}

fn prepare(tape: &mut Tape, bundle: &BoundBundle, batch: &Batch, cfg: &ObjectiveConfig) -> Result<(Var, Var)> {
    cfg.validate()?;
    check_dims(bundle, batch)?;
    Ok((tape.constant(batch.x.clone())?, tape.constant(batch.y.clone())?))
}

/// Negative VCCA bound with the posterior `q(z|x)`:
/// `mean_i [ KL(q(z|x_i) || N(0, I)) - 1/L sum_l (w_x log p(x_i|z_il) + w_y log p(y_i|z_il)) ]`.
///
/// Bidirectional bundles are accepted; only their x-conditioned bound is used.
pub fn vcca_loss(tape: &mut Tape, bundle: &BoundBundle, batch: &Batch, cfg: &ObjectiveConfig, rng: &mut RngState) -> Result<LossOutput> {
    if !matches!(bundle.kind, ObjectiveKind::Vcca | ObjectiveKind::BiVcca) {
        return Err(Error::InvalidArgument(format!("vcca_loss on a {:?} bundle", bundle.kind)));
    }
    let (x, y) = prepare(tape, bundle, batch, cfg)?;
    let (loss, terms) = single_bound(tape, bundle, x, y, Condition::X, cfg, rng)?;
    Ok(LossOutput { loss, terms, parts: Vec::new() })
}

/// Negative VCCA-private bound: the shared posterior `q(z|x)` plus private
/// posteriors `q(h_x|x)` and `q(h_y|y)`; decoders read `concat(z, h)`.
/// Zero-sized private latents reduce this to [`vcca_loss`] exactly.
pub fn vcca_private_loss(
    tape: &mut Tape,
    bundle: &BoundBundle,
    batch: &Batch,
    cfg: &ObjectiveConfig,
    rng: &mut RngState,
) -> Result<LossOutput> {
    if !matches!(bundle.kind, ObjectiveKind::VccaPrivate | ObjectiveKind::BiVccaPrivate) {
        return Err(Error::InvalidArgument(format!("vcca_private_loss on a {:?} bundle", bundle.kind)));
    }
    let (x, y) = prepare(tape, bundle, batch, cfg)?;
    let (loss, terms) = single_bound(tape, bundle, x, y, Condition::X, cfg, rng)?;
    Ok(LossOutput { loss, terms, parts: Vec::new() })
}

/// `mu * loss_{q(z|x)} + (1 - mu) * loss_{q(z|y)}` with shared decoders (and
/// shared private posteriors for the private kind). The two bounds draw
/// independent noise. A bound with zero weight is skipped entirely, so the
/// endpoints consume exactly the random stream of the single-bound loss.
pub fn bi_vcca_loss(tape: &mut Tape, bundle: &BoundBundle, batch: &Batch, cfg: &ObjectiveConfig, rng: &mut RngState) -> Result<LossOutput> {
    if !bundle.kind.is_bidirectional() {
        return Err(Error::InvalidArgument(format!("bi_vcca_loss on a {:?} bundle", bundle.kind)));
    }
    BoundBundle::require(&bundle.enc_zy, "enc_zy")?;
    let (x, y) = prepare(tape, bundle, batch, cfg)?;
    let mu = cfg.mu;
    if mu == 1.0 {
        let (loss, terms) = single_bound(tape, bundle, x, y, Condition::X, cfg, rng)?;
        return Ok(LossOutput { loss, parts: vec![terms.clone()], terms });
    }
    if mu == 0.0 {
        let (loss, terms) = single_bound(tape, bundle, x, y, Condition::Y, cfg, rng)?;
        return Ok(LossOutput { loss, parts: vec![terms.clone()], terms });
    }
    let (lx, tx) = single_bound(tape, bundle, x, y, Condition::X, cfg, rng)?;
    let (ly, ty) = single_bound(tape, bundle, x, y, Condition::Y, cfg, rng)?;
    let a = tape.scale(lx, mu)?;
    let b = tape.scale(ly, 1.0 - mu)?;
    let loss = tape.add(a, b)?;
    let terms = ElboTerms::mix(mu, &tx, &ty);
    Ok(LossOutput { loss, terms, parts: vec![tx, ty] })
}
