use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Overlap between two feature matrices with the same rows:
/// `|H^T Z|_F^2 / (|H|_F^2 |Z|_F^2)`, in `[0, 1]`. Zero when every column of
/// `H` is orthogonal to every column of `Z`.
pub fn orthogonality_score(z: &Tensor, h: &Tensor) -> Result<f64> {
    if z.shape().len() != 2 || h.shape().len() != 2 || z.rows() != h.rows() {
        return Err(Error::shape("orthogonality_score", format!("Z {:?} vs H {:?}", z.shape(), h.shape())));
    }
    let nz: f64 = z.data().iter().map(|v| v * v).sum();
    let nh: f64 = h.data().iter().map(|v| v * v).sum();
    if nz == 0.0 || nh == 0.0 {
        return Err(Error::InvalidArgument("orthogonality_score of a zero-norm matrix".into()));
    }
    let cross = h.transpose()?.matmul(z)?;
    let num: f64 = cross.data().iter().map(|v| v * v).sum();
    let score = num / (nh * nz);
    if !score.is_finite() {
        return Err(Error::NonFinite { op: "orthogonality_score" });
    }
    // Cauchy-Schwarz bounds the ratio by 1; rounding can exceed it when the
    // bound is attained.
    Ok(score.min(1.0))
}

/// Exact `log p(x, y)` under `z ~ N(0, I)`, `x = W_x z + e_x`, `y = W_y z + e_y`
/// with unit-variance Gaussian noise: the joint is zero-mean Gaussian with
/// covariance `[[W_x W_x^T + I, W_x W_y^T], [W_y W_x^T, W_y W_y^T + I]]`.
/// `W_x` is `[d_x, d_z]` and `W_y` is `[d_y, d_z]`.
pub fn analytic_linear_gaussian_loglik(w_x: &Tensor, w_y: &Tensor, x: &[f64], y: &[f64]) -> Result<f64> {
    let (dx, dy) = (w_x.rows(), w_y.rows());
    if w_x.shape().len() != 2 || w_y.shape().len() != 2 || w_x.last_dim() != w_y.last_dim() || x.len() != dx || y.len() != dy {
        return Err(Error::shape(
            "analytic_linear_gaussian_loglik",
            format!("W_x {:?}, W_y {:?}, x {}, y {}", w_x.shape(), w_y.shape(), x.len(), y.len()),
        ));
    }
    let dz = w_x.last_dim();
    let mut w = DMatrix::zeros(dx + dy, dz);
    for i in 0..dx {
        w.row_mut(i).copy_from_slice(w_x.row(i));
    }
    for i in 0..dy {
        w.row_mut(dx + i).copy_from_slice(w_y.row(i));
    }
    let d = dx + dy;
    let cov = &w * w.transpose() + DMatrix::identity(d, d);
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("joint covariance is not positive definite".into()))?;
    let v = DVector::from_iterator(d, x.iter().chain(y).copied());
    let sol = chol.solve(&v);
    let quad = v.dot(&sol);
    let log_det = 2.0 * chol.l().diagonal().iter().map(|l| l.ln()).sum::<f64>();
    Ok(-0.5 * (d as f64 * (2.0 * PI).ln() + log_det + quad))
}
