use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;
use rayon::prelude::*;

use crate::tensor::{gemm, Tensor};

/// Default grid for the hinge-loss weight `C`.
pub const C_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Stopping rule of the dual coordinate-descent solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    /// Maximum passes over the training set.
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// A pass ends training once the spread of projected dual gradients falls below this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Seeds the per-pass visiting order.
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    100
}
fn default_tol() -> f64 {
    0.01
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { epochs: default_epochs(), tol: default_tol(), seed: 0 }
    }
}

/// One-vs-all linear classifier. Inputs are centered by the training mean
/// and extended with a constant column (regularized like any other weight).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub classes: usize,
    /// Per-class weights, `[classes, d + 1]`; the last column multiplies the constant feature.
    pub weights: Tensor,
    pub center: Vec<f64>,
    /// Value of the constant feature (mean row norm of the centered training data).
    pub bias_feature: f64,
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn augment(&self, feats: &Tensor) -> Result<Tensor> {
        augment(feats, &self.center, self.bias_feature)
    }

    /// Class scores, `[n, classes]`.
    pub fn scores(&self, feats: &Tensor) -> Result<Tensor> {
        let a = self.augment(feats)?;
        let (n, d1) = (a.rows(), a.last_dim());
        let mut out = vec![0.0; n * self.classes];
        gemm(n, d1, self.classes, a.data(), false, self.weights.data(), true, &mut out, 0.0);
        Tensor::from_vec(&[n, self.classes], out)
    }

    /// Highest-scoring class per row; ties go to the lowest index.
    pub fn predict(&self, feats: &Tensor) -> Result<Vec<usize>> {
        let s = self.scores(feats)?;
        Ok((0..s.rows())
            .map(|i| {
                let row = s.row(i);
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect())
    }
}

fn augment(feats: &Tensor, center: &[f64], bias: f64) -> Result<Tensor> {
    if feats.shape().len() != 2 || feats.last_dim() != center.len() {
        return Err(Error::shape(
            "linear classifier",
            format!("features {:?}, classifier expects width {}", feats.shape(), center.len()),
        ));
    }
    let d = center.len();
    let mut out = Vec::with_capacity(feats.rows() * (d + 1));
    for i in 0..feats.rows() {
        out.extend(feats.row(i).iter().zip(center).map(|(v, c)| v - c));
        out.push(bias);
    }
    Tensor::from_vec(&[feats.rows(), d + 1], out)
}

/// Fits `K` binary L2-regularized hinge classifiers (class `k` vs the rest)
/// minimizing `1/2 |w|^2 + C * sum_i max(0, 1 - t_i <w, x_i>)`.
///
/// The solver is dual coordinate descent: each pass visits the samples in
/// an order drawn from `cfg.seed` and minimizes the dual exactly in one
/// coordinate at a time, keeping `w = sum_i alpha_i t_i x_i`. It stops after
/// `cfg.epochs` passes or once the projected gradients of a pass span less
/// than `cfg.tol`. Everything is deterministic given `cfg.seed`.
pub fn train_linear_classifier(feats: &Tensor, labels: &[usize], c: f64, cfg: &SvmConfig) -> Result<LinearClassifier> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    if cfg.epochs == 0 || !(cfg.tol > 0.0) {
        return Err(Error::Config("classifier epochs and tol must be positive".into()));
    }
    let n = feats.rows();
    if feats.shape().len() != 2 || labels.len() != n {
        return Err(Error::shape("train_linear_classifier", format!("{:?} features, {} labels", feats.shape(), labels.len())));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut present = vec![false; classes];
    labels.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::InvalidArgument("classifier needs at least two distinct labels".into()));
    }
    let d = feats.last_dim();
    let mut center = vec![0.0; d];
    for i in 0..n {
        center.iter_mut().zip(feats.row(i)).for_each(|(c, v)| *c += v);
    }
    center.iter_mut().for_each(|c| *c /= n as f64);
    let norm_sum: f64 = (0..n)
        .map(|i| feats.row(i).iter().zip(&center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>().sqrt())
        .sum();
    let bias = if norm_sum > 0.0 { norm_sum / n as f64 } else { 1.0 };
    let a = augment(feats, &center, bias)?;
    let d1 = d + 1;
    let q: Vec<f64> = (0..n).map(|i| a.row(i).iter().map(|v| v * v).sum()).collect();
    let root = RngState::new(cfg.seed);
    let orders: Vec<Vec<usize>> = (0..cfg.epochs)
        .map(|e| {
            let mut o: Vec<usize> = (0..n).collect();
            root.substream(e as u64).shuffle(&mut o);
            o
        })
        .collect();
    let weights: Vec<Vec<f64>> = (0..classes)
        .into_par_iter()
        .map(|k| {
            let t: Vec<f64> = labels.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            let mut alpha = vec![0.0; n];
            let mut w = vec![0.0; d1];
            for order in &orders {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for &i in order {
                    let x = a.row(i);
                    let g = t[i] * x.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() - 1.0;
                    let pg = if alpha[i] == 0.0 {
                        g.min(0.0)
                    } else if alpha[i] == c {
                        g.max(0.0)
                    } else {
                        g
                    };
                    lo = lo.min(pg);
                    hi = hi.max(pg);
                    if pg != 0.0 {
                        let old = alpha[i];
                        alpha[i] = (old - g / q[i]).clamp(0.0, c);
                        let step = (alpha[i] - old) * t[i];
                        w.iter_mut().zip(x).for_each(|(w, x)| *w += step * x);
                    }
                }
                if hi - lo < cfg.tol {
                    break;
                }
            }
            w
        })
        .collect();
    Ok(LinearClassifier { classes, weights: Tensor::from_vec(&[classes, d1], weights.concat())?, center, bias_feature: bias })
}

/// Fraction of rows whose predicted class differs from the label.
pub fn classification_error(clf: &LinearClassifier, feats: &Tensor, labels: &[usize]) -> Result<f64> {
    let pred = clf.predict(feats)?;
    if pred.len() != labels.len() || pred.is_empty() {
        return Err(Error::shape("classification_error", format!("{} predictions, {} labels", pred.len(), labels.len())));
    }
    Ok(pred.iter().zip(labels).filter(|(p, l)| p != l).count() as f64 / labels.len() as f64)
}

/// Result of choosing `C` on a tuning split.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub classifier: LinearClassifier,
    pub c: f64,
    pub tune_error: f64,
}

/// Trains one classifier per `C` in `grid` and keeps the one with the lowest
/// tuning error (the smallest `C` on ties).
pub fn select_linear_classifier(
    train: (&Tensor, &[usize]),
    tune: (&Tensor, &[usize]),
    grid: &[f64],
    cfg: &SvmConfig,
) -> Result<Selection> {
    let mut best: Option<Selection> = None;
    for &c in grid {
        let classifier = train_linear_classifier(train.0, train.1, c, cfg)?;
        let tune_error = classification_error(&classifier, tune.0, tune.1)?;
        if best.as_ref().map_or(true, |b| tune_error < b.tune_error) {
            best = Some(Selection { classifier, c, tune_error });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty C grid".into()))
}
