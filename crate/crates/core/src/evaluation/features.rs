use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::networks::{BoundNetwork, Dropout, Network};
use crate::objectives::ModelBundle;
use crate::tensor::{Tape, Tensor};

/// Rows evaluated per tape when extracting features.
const CHUNK: usize = 256;

/// Which projection to use as features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// View-1 inputs themselves.
    Raw,
    ZFromX,
    ZFromY,
    Hx,
    Hy,
    ConcatZxZy,
}

impl FeatureSource {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSource::Raw => "raw",
            FeatureSource::ZFromX => "z_from_x",
            FeatureSource::ZFromY => "z_from_y",
            FeatureSource::Hx => "hx",
            FeatureSource::Hy => "hy",
            FeatureSource::ConcatZxZy => "concat_zx_zy",
        }
    }
}

/// Features of one data split, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub values: Tensor,
    pub source: FeatureSource,
}

impl FeatureMatrix {
    pub fn new(values: Tensor, source: FeatureSource) -> Result<FeatureMatrix> {
        if values.shape().len() != 2 {
            return Err(Error::shape("features", format!("expected 2-D, got {:?}", values.shape())));
        }
        if !values.is_finite() {
            return Err(Error::NonFinite { op: "features" });
        }
        Ok(FeatureMatrix { values, source })
    }

    pub fn rows(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn cols(&self) -> usize {
        self.values.shape()[1]
    }
}

/// Deterministic projection (posterior mean or code) of every row of `input`.
/// Runs chunks on the current rayon pool; the result does not depend on the
/// number of threads.
pub fn project(net: &Network, input: &Tensor) -> Result<Tensor> {
    let (n, d) = (input.rows(), input.last_dim());
    if input.shape().len() != 2 || d != net.spec().input_dim {
        return Err(Error::shape(
            "project",
            format!("input {:?}, network expects [n, {}]", input.shape(), net.spec().input_dim),
        ));
    }
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let parts = starts
        .par_iter()
        .map(|&s| {
            let rows: Vec<usize> = (s..(s + CHUNK).min(n)).collect();
            let mut tape = Tape::new();
            let bound: BoundNetwork = net.bind(&mut tape)?;
            let x = tape.constant(input.select_rows(&rows)?)?;
            let out = bound.embed(&mut tape, x, &mut Dropout::off())?;
            Ok(tape.value(out).data().to_vec())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let width = parts[0].len() / (CHUNK.min(n));
    Tensor::from_vec(&[n, width], parts.concat())
}

fn require<'a>(net: Option<&'a Network>, what: &str) -> Result<&'a Network> {
    net.ok_or_else(|| Error::InvalidArgument(format!("feature source needs the {what} encoder, which this model lacks")))
}

/// Posterior means (dropout off, no sampling) for the requested source.
/// `x` and `y` are the two views of the same rows.
pub fn extract_features(bundle: &ModelBundle, x: &Tensor, y: &Tensor, which: FeatureSource) -> Result<FeatureMatrix> {
    let values = match which {
        FeatureSource::Raw => x.clone(),
        FeatureSource::ZFromX => project(&bundle.enc_zx, x)?,
        FeatureSource::ZFromY => project(require(bundle.enc_zy.as_ref(), "enc_zy")?, y)?,
        FeatureSource::Hx => project(require(bundle.enc_hx.as_ref(), "enc_hx")?, x)?,
        FeatureSource::Hy => project(require(bundle.enc_hy.as_ref(), "enc_hy")?, y)?,
        FeatureSource::ConcatZxZy => {
            let zy = project(require(bundle.enc_zy.as_ref(), "enc_zy")?, y)?;
            let zx = project(&bundle.enc_zx, x)?;
            let (n, a, b) = (zx.rows(), zx.last_dim(), zy.last_dim());
            let data = (0..n).flat_map(|i| zx.row(i).iter().chain(zy.row(i)).copied().collect::<Vec<_>>()).collect();
            Tensor::from_vec(&[n, a + b], data)?
        }
    };
    FeatureMatrix::new(values, which)
}

/// CSV with header `f0,...,f{d-1},label` (label column empty when unknown).
pub fn write_features_csv(path: &Path, feats: &FeatureMatrix, labels: Option<&[usize]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != feats.rows() {
            return Err(Error::shape("write_features_csv", format!("{} labels for {} rows", l.len(), feats.rows())));
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = (0..feats.cols()).map(|j| format!("f{j}")).collect();
    writeln!(w, "{},label", header.join(","))?;
    for i in 0..feats.rows() {
        let row: Vec<String> = feats.values.row(i).iter().map(|v| v.to_string()).collect();
        let label = labels.map(|l| l[i].to_string()).unwrap_or_default();
        writeln!(w, "{},{label}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
