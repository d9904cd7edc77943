//! Diagonal-Gaussian posteriors, the standard-normal prior, and the Bernoulli
//! and Gaussian observation likelihoods.
//!
//! All operations work on batches recorded on a [`Tape`]: a posterior holds
//! `[n, d]` means and log standard deviations, and every likelihood or KL
//! returns a scalar *summed* over the batch. Callers divide by the batch size.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

/// Default clamp range for encoder log standard deviations.
pub const LOG_SIGMA_RANGE: (f64, f64) = (-7.0, 7.0);

/// Bernoulli means are clamped to `[BERNOULLI_EPS, 1 - BERNOULLI_EPS]`.
pub const BERNOULLI_EPS: f64 = 1e-7;

/// Diagonal Gaussian `N(mu, diag(exp(log_sigma))^2)` on a tape.
#[derive(Clone, Copy, Debug)]
pub struct DiagonalGaussian {
    pub mu: Var,
    pub log_sigma: Var,
}

impl DiagonalGaussian {
    /// Wraps raw encoder outputs, clamping `log_sigma` to [`LOG_SIGMA_RANGE`].
    pub fn new(tape: &mut Tape, mu: Var, raw_log_sigma: Var) -> Result<Self> {
        Self::with_range(tape, mu, raw_log_sigma, LOG_SIGMA_RANGE)
    }

    pub fn with_range(tape: &mut Tape, mu: Var, raw_log_sigma: Var, range: (f64, f64)) -> Result<Self> {
        if tape.shape(mu) != tape.shape(raw_log_sigma) {
            return Err(Error::shape(
                "diagonal_gaussian",
                format!("mu {:?} vs log_sigma {:?}", tape.shape(mu), tape.shape(raw_log_sigma)),
            ));
        }
        let log_sigma = tape.clamp(raw_log_sigma, range.0, range.1)?;
        Ok(DiagonalGaussian { mu, log_sigma })
    }

    pub fn dim(&self, tape: &Tape) -> usize {
        tape.value(self.mu).last_dim()
    }
}

/// `KL(q || N(0, I)) = -1/2 sum_j (1 + log s_j^2 - s_j^2 - mu_j^2)`, summed over
/// every row of the batch.
pub fn kl_to_standard_normal(tape: &mut Tape, q: &DiagonalGaussian) -> Result<Var> {
    let two_ls = tape.scale(q.log_sigma, 2.0)?;
    let var = tape.exp(two_ls)?;
    let mu2 = tape.square(q.mu)?;
    let a = tape.add_const(two_ls, 1.0)?;
    let b = tape.sub(a, var)?;
    let c = tape.sub(b, mu2)?;
    let s = tape.sum(c)?;
    tape.scale(s, -0.5)
}

/// `z = mu + exp(log_sigma) * eps`. `eps` enters as a constant.
pub fn reparameterize(tape: &mut Tape, q: &DiagonalGaussian, eps: &Tensor) -> Result<Var> {
    if tape.shape(q.mu) != eps.shape() {
        return Err(Error::shape(
            "reparameterize",
            format!("mu {:?} vs eps {:?}", tape.shape(q.mu), eps.shape()),
        ));
    }
    let sigma = tape.exp(q.log_sigma)?;
    let e = tape.constant(eps.clone())?;
    let noise = tape.mul(sigma, e)?;
    tape.add(q.mu, noise)
}

/// `sum_j x_j log m_j + (1 - x_j) log(1 - m_j)`; `mean` is clamped first.
/// Real-valued targets in `[0, 1]` are allowed (cross-entropy form).
pub fn bernoulli_log_lik(tape: &mut Tape, x: Var, mean: Var) -> Result<Var> {
    if tape.shape(x) != tape.shape(mean) {
        return Err(Error::shape(
            "bernoulli_log_lik",
            format!("x {:?} vs mean {:?}", tape.shape(x), tape.shape(mean)),
        ));
    }
    let m = tape.clamp(mean, BERNOULLI_EPS, 1.0 - BERNOULLI_EPS)?;
    let log_m = tape.log(m)?;
    let one_minus_m = {
        let neg = tape.scale(m, -1.0)?;
        tape.add_const(neg, 1.0)?
    };
    let log_1m = tape.log(one_minus_m)?;
    let one_minus_x = {
        let neg = tape.scale(x, -1.0)?;
        tape.add_const(neg, 1.0)?
    };
    let a = tape.mul(x, log_m)?;
    let b = tape.mul(one_minus_x, log_1m)?;
    let ab = tape.add(a, b)?;
    tape.sum(ab)
}

/// Bernoulli log-likelihood parameterized by logits:
/// `sum_j x_j l_j - softplus(l_j)`. Exact for saturated means, where the
/// mean form loses precision in `log(1 - m)`.
pub fn bernoulli_log_lik_logits(tape: &mut Tape, x: Var, logits: Var) -> Result<Var> {
    if tape.shape(x) != tape.shape(logits) {
        return Err(Error::shape(
            "bernoulli_log_lik_logits",
            format!("x {:?} vs logits {:?}", tape.shape(x), tape.shape(logits)),
        ));
    }
    let xl = tape.mul(x, logits)?;
    let sp = tape.softplus(logits)?;
    let d = tape.sub(xl, sp)?;
    tape.sum(d)
}

/// Standard deviation of a Gaussian observation model.
#[derive(Clone, Copy, Debug)]
pub enum Sigma {
    /// One fixed value shared by every dimension.
    Fixed(f64),
    /// Per-dimension log standard deviation, shaped like the mean.
    Log(Var),
}

/// `sum_j -1/2 log(2 pi s_j^2) - (x_j - m_j)^2 / (2 s_j^2)`.
pub fn gaussian_log_lik(tape: &mut Tape, x: Var, mean: Var, sigma: Sigma) -> Result<Var> {
    if tape.shape(x) != tape.shape(mean) {
        return Err(Error::shape(
            "gaussian_log_lik",
            format!("x {:?} vs mean {:?}", tape.shape(x), tape.shape(mean)),
        ));
    }
    let n = tape.value(x).numel() as f64;
    let diff = tape.sub(x, mean)?;
    let sq = tape.square(diff)?;
    match sigma {
        Sigma::Fixed(s) => {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("sigma must be positive, got {s}")));
            }
            let ssq = tape.sum(sq)?;
            let quad = tape.scale(ssq, -0.5 / (s * s))?;
            tape.add_const(quad, -0.5 * n * (2.0 * PI * s * s).ln())
        }
        Sigma::Log(ls) => {
            if tape.shape(ls) != tape.shape(x) {
                return Err(Error::shape(
                    "gaussian_log_lik",
                    format!("log_sigma {:?} vs x {:?}", tape.shape(ls), tape.shape(x)),
                ));
            }
            let neg2 = tape.scale(ls, -2.0)?;
            let inv_var = tape.exp(neg2)?;
            let w = tape.mul(sq, inv_var)?;
            let half = tape.scale(w, -0.5)?;
            let t = tape.sub(half, ls)?;
            let s = tape.sum(t)?;
            tape.add_const(s, -0.5 * n * (2.0 * PI).ln())
        }
    }
}

/// Observation likelihood family for one view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationKind {
    /// Independent Bernoulli per dimension; decoder means pass through a sigmoid.
    BernoulliMean,
    /// Isotropic Gaussian with a fixed standard deviation (data units).
    GaussianFixedSigma {
        sigma: f64,
        #[serde(default)]
        sigmoid_mean: bool,
    },
    /// Diagonal Gaussian whose per-dimension log standard deviation is a decoder output.
    GaussianLearnedSigma {
        #[serde(default)]
        sigmoid_mean: bool,
    },
}

/// Decoder outputs for one view.
#[derive(Clone, Copy, Debug)]
pub struct ObsParams {
    pub mean: Var,
    /// Pre-sigmoid outputs of a Bernoulli head.
    pub logits: Option<Var>,
    /// Clamped log standard deviation, present for learned-sigma models.
    pub log_sigma: Option<Var>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub kind: ObservationKind,
    pub dim: usize,
}

impl ObservationModel {
    pub fn new(kind: ObservationKind, dim: usize) -> Result<Self> {
        if let ObservationKind::GaussianFixedSigma { sigma, .. } = kind {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::Config(format!("fixed sigma must be positive, got {sigma}")));
            }
        }
        if dim == 0 {
            return Err(Error::Config("observation dimension must be positive".into()));
        }
        Ok(ObservationModel { kind, dim })
    }

    /// Summed log-likelihood of the targets `x` under decoder outputs `p`.
    pub fn log_lik(&self, tape: &mut Tape, x: Var, p: &ObsParams) -> Result<Var> {
        match self.kind {
            ObservationKind::BernoulliMean => match p.logits {
                Some(l) => bernoulli_log_lik_logits(tape, x, l),
                None => bernoulli_log_lik(tape, x, p.mean),
            },
            ObservationKind::GaussianFixedSigma { sigma, .. } => {
                gaussian_log_lik(tape, x, p.mean, Sigma::Fixed(sigma))
            }
            ObservationKind::GaussianLearnedSigma { .. } => {
                let ls = p.log_sigma.ok_or_else(|| {
                    Error::InvalidArgument("learned-sigma model needs a log_sigma output".into())
                })?;
                gaussian_log_lik(tape, x, p.mean, Sigma::Log(ls))
            }
        }
    }

    /// Per-dimension standard deviation of the observation distribution.
    pub fn stddev(&self, mean: &[f64], log_sigma: Option<&[f64]>) -> Vec<f64> {
        match self.kind {
            ObservationKind::BernoulliMean => mean
                .iter()
                .map(|m| {
                    let m = m.clamp(BERNOULLI_EPS, 1.0 - BERNOULLI_EPS);
                    (m * (1.0 - m)).sqrt()
                })
                .collect(),
            ObservationKind::GaussianFixedSigma { sigma, .. } => vec![sigma; mean.len()],
            ObservationKind::GaussianLearnedSigma { .. } => log_sigma
                .map(|ls| ls.iter().map(|v| v.exp()).collect())
                .unwrap_or_else(|| vec![1.0; mean.len()]),
        }
    }
}
