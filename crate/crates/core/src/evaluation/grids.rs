use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::networks::{BoundNetwork, Dropout};
use crate::objectives::ModelBundle;
use crate::rng::{sample_standard_normal, RngState};
use crate::tensor::{Tape, Tensor, Var};

/// Gray level of the 1-pixel separators between cells.
pub const SEPARATOR: f64 = 1.0;

/// A `rows x cols` mosaic of square `side x side` cells separated by 1-pixel lines.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    pub rows: usize,
    pub cols: usize,
    pub side: usize,
    /// Row-major pixels, `height() * width()`.
    pub pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(rows: usize, cols: usize, side: usize) -> ImageGrid {
        let (h, w) = (rows * side + rows.saturating_sub(1), cols * side + cols.saturating_sub(1));
        ImageGrid { rows, cols, side, pixels: vec![SEPARATOR; h * w] }
    }

    pub fn height(&self) -> usize {
        self.rows * self.side + self.rows.saturating_sub(1)
    }

    pub fn width(&self) -> usize {
        self.cols * self.side + self.cols.saturating_sub(1)
    }

    pub fn set_cell(&mut self, r: usize, c: usize, img: &[f64]) -> Result<()> {
        let s = self.side;
        if img.len() != s * s || r >= self.rows || c >= self.cols {
            return Err(Error::shape("image grid", format!("cell ({r}, {c}) with {} pixels", img.len())));
        }
        let w = self.width();
        for i in 0..s {
            let start = (r * (s + 1) + i) * w + c * (s + 1);
            self.pixels[start..start + s].copy_from_slice(&img[i * s..(i + 1) * s]);
        }
        Ok(())
    }

    pub fn cell(&self, r: usize, c: usize) -> Vec<f64> {
        let (s, w) = (self.side, self.width());
        (0..s)
            .flat_map(|i| {
                let start = (r * (s + 1) + i) * w + c * (s + 1);
                self.pixels[start..start + s].to_vec()
            })
            .collect()
    }

    /// Binary PGM (P5), 8-bit, `round(255 * clamp(v, 0, 1))`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        out.extend(self.pixels.iter().map(|v| (255.0 * v.clamp(0.0, 1.0)).round() as u8));
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, self.to_pgm())?;
        Ok(())
    }
}

fn side_of(d: usize) -> Result<usize> {
    let s = (d as f64).sqrt().round() as usize;
    if s * s != d {
        return Err(Error::InvalidArgument(format!("{d} pixels is not a square image")));
    }
    Ok(s)
}

fn need<'a>(net: &'a Option<BoundNetwork>, what: &str) -> Result<&'a BoundNetwork> {
    net.as_ref().ok_or_else(|| Error::InvalidArgument(format!("model has no {what} network")))
}

/// Per row: view-2 input, reconstruction mean, reconstruction standard
/// deviation. The shared code is the mean of `q(z|x)`; private models add a
/// sample of `h_y` from `q(h_y|y)` drawn from `rng`.
pub fn reconstruct_grid(bundle: &ModelBundle, x: &Tensor, y: &Tensor, rng: &mut RngState) -> Result<ImageGrid> {
    let n = x.rows();
    if y.rows() != n || n == 0 {
        return Err(Error::shape("reconstruct_grid", format!("x {:?} vs y {:?}", x.shape(), y.shape())));
    }
    let side = side_of(y.last_dim())?;
    let mut tape = Tape::new();
    let b = bundle.bind(&mut tape)?;
    let xv = tape.constant(x.clone())?;
    let yv = tape.constant(y.clone())?;
    let z = b.enc_zx.embed(&mut tape, xv, &mut Dropout::off())?;
    let latent = match &b.enc_hy {
        Some(enc) if b.d_hy > 0 => {
            let q = enc.encode(&mut tape, yv, &mut Dropout::off())?;
            let eps = sample_standard_normal(rng, tape.shape(q.mu));
            let h = crate::distributions::reparameterize(&mut tape, &q, &eps)?;
            tape.concat(&[z, h])?
        }
        _ => z,
    };
    let p = need(&b.dec_y, "dec_y")?.decode(&mut tape, latent, &mut Dropout::off())?;
    let mean = tape.value(p.mean).clone();
    let log_sigma = p.log_sigma.map(|v: Var| tape.value(v).clone());
    let mut grid = ImageGrid::new(n, 3, side);
    for i in 0..n {
        let sd = bundle.obs_y.stddev(mean.row(i), log_sigma.as_ref().map(|t| t.row(i)));
        grid.set_cell(i, 0, y.row(i))?;
        grid.set_cell(i, 1, mean.row(i))?;
        grid.set_cell(i, 2, &sd)?;
    }
    Ok(grid)
}

/// `n x n` view-1 decodes: row `i` fixes `z` to the mean of `q(z|x_i)`,
/// column `j` fixes `h_x` (zero for column 0, otherwise a draw from the
/// prior using `rng`).
pub fn private_traversal_grid(bundle: &ModelBundle, x: &Tensor, n: usize, rng: &mut RngState) -> Result<ImageGrid> {
    if !bundle.kind.has_private() || bundle.d_hx == 0 {
        return Err(Error::InvalidArgument(format!("{:?} model has no view-1 private variables", bundle.kind)));
    }
    if n == 0 || x.rows() < n {
        return Err(Error::InvalidArgument(format!("need {n} inputs, got {}", x.rows())));
    }
    let side = side_of(x.last_dim())?;
    let rows: Vec<usize> = (0..n).collect();
    let mut h = vec![0.0; bundle.d_hx];
    if n > 1 {
        h.extend_from_slice(sample_standard_normal(rng, &[n - 1, bundle.d_hx]).data());
    }
    let mut tape = Tape::new();
    let b = bundle.bind(&mut tape)?;
    let xv = tape.constant(x.select_rows(&rows)?)?;
    let z = b.enc_zx.embed(&mut tape, xv, &mut Dropout::off())?;
    let zs = tape.value(z).clone();
    // Cell (i, j) is row i * n + j of the decoder input.
    let mut input = Vec::with_capacity(n * n * (bundle.d_z + bundle.d_hx));
    for i in 0..n {
        for j in 0..n {
            input.extend_from_slice(zs.row(i));
            input.extend_from_slice(&h[j * bundle.d_hx..(j + 1) * bundle.d_hx]);
        }
    }
    let iv = tape.constant(Tensor::from_vec(&[n * n, bundle.d_z + bundle.d_hx], input)?)?;
    let p = need(&b.dec_x, "dec_x")?.decode(&mut tape, iv, &mut Dropout::off())?;
    let mean = tape.value(p.mean);
    let mut grid = ImageGrid::new(n, n, side);
    for i in 0..n {
        for j in 0..n {
            grid.set_cell(i, j, mean.row(i * n + j))?;
        }
    }
    Ok(grid)
}
