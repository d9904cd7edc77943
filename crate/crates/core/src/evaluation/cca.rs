use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Ridge added to each view's covariance before whitening.
pub const CCA_RIDGE: f64 = 1e-6;

/// Linear CCA fit: `features = (input - mean) * projection`.
#[derive(Clone, Debug, PartialEq)]
pub struct CcaModel {
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    /// `[d_x, k]`.
    pub proj_x: Tensor,
    /// `[d_y, k]`.
    pub proj_y: Tensor,
    /// Canonical correlations in `[0, 1]`, nonincreasing.
    pub correlations: Vec<f64>,
}

fn to_matrix(t: &Tensor) -> DMatrix<f64> {
    DMatrix::from_row_slice(t.rows(), t.last_dim(), t.data())
}

fn to_tensor(m: &DMatrix<f64>) -> Result<Tensor> {
    let data = (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect();
    Tensor::from_vec(&[m.nrows(), m.ncols()], data)
}

fn center(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let mean = m.row_mean().transpose();
    let mut c = m.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    (c, mean)
}

/// `(C + ridge I)^(-1/2)` via the symmetric eigendecomposition.
fn inv_sqrt(cov: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    let reg = cov + DMatrix::identity(d, d) * CCA_RIDGE;
    let eig = reg.symmetric_eigen();
    let floor = CCA_RIDGE * 1e-3;
    if eig.eigenvalues.iter().any(|&l| !(l > floor)) {
        return Err(Error::InvalidArgument(format!("{what} covariance is rank deficient beyond ridge repair")));
    }
    let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * inv * eig.eigenvectors.transpose())
}

/// Classical CCA: center both views, whiten each covariance (plus
/// [`CCA_RIDGE`]), and take the top-`k` singular pairs of the whitened
/// cross-covariance. Covariances are normalized by `N`.
pub fn linear_cca(x: &Tensor, y: &Tensor, k: usize) -> Result<CcaModel> {
    let (n, dx, dy) = (x.rows(), x.last_dim(), y.last_dim());
    if x.shape().len() != 2 || y.shape().len() != 2 || y.rows() != n {
        return Err(Error::shape("linear_cca", format!("x {:?} vs y {:?}", x.shape(), y.shape())));
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite { op: "linear_cca" });
    }
    if k == 0 || k > dx.min(dy) {
        return Err(Error::InvalidArgument(format!("k = {k} must be in 1..={}", dx.min(dy))));
    }
    if n <= dx.max(dy) {
        return Err(Error::InvalidArgument(format!("need more than {} samples, got {n}", dx.max(dy))));
    }
    let (xc, mx) = center(&to_matrix(x));
    let (yc, my) = center(&to_matrix(y));
    let scale = 1.0 / n as f64;
    let cxx = xc.transpose() * &xc * scale;
    let cyy = yc.transpose() * &yc * scale;
    let cxy = xc.transpose() * &yc * scale;
    let wx = inv_sqrt(&cxx, "view-1")?;
    let wy = inv_sqrt(&cyy, "view-2")?;
    let t = &wx * cxy * &wy;
    let svd = t.svd(true, true);
    let (u, vt) = (svd.u.expect("requested u"), svd.v_t.expect("requested v_t"));
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let order = &order[..k];
    let uk = DMatrix::from_columns(&order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let vk = DMatrix::from_columns(&order.iter().map(|&i| vt.row(i).transpose()).collect::<Vec<_>>());
    let correlations = order.iter().map(|&i| svd.singular_values[i].clamp(0.0, 1.0)).collect();
    Ok(CcaModel {
        mean_x: mx.iter().copied().collect(),
        mean_y: my.iter().copied().collect(),
        proj_x: to_tensor(&(wx * uk))?,
        proj_y: to_tensor(&(wy * vk))?,
        correlations,
    })
}

impl CcaModel {
    fn apply(input: &Tensor, mean: &[f64], proj: &Tensor) -> Result<Tensor> {
        if input.shape().len() != 2 || input.last_dim() != mean.len() {
            return Err(Error::shape("cca transform", format!("{:?} vs width {}", input.shape(), mean.len())));
        }
        let data = (0..input.rows()).flat_map(|i| input.row(i).iter().zip(mean).map(|(v, m)| v - m).collect::<Vec<_>>());
        Tensor::from_vec(input.shape(), data.collect())?.matmul(proj)
    }

    pub fn transform_x(&self, x: &Tensor) -> Result<Tensor> {
        Self::apply(x, &self.mean_x, &self.proj_x)
    }

    pub fn transform_y(&self, y: &Tensor) -> Result<Tensor> {
        Self::apply(y, &self.mean_y, &self.proj_y)
    }
}
