//! Two-view datasets: the synthetic glyph generator, IDX ingestion, the
//! noisy-MNIST pairing recipe, and on-disk persistence.

mod idx;
mod image;
mod noisy;
mod synth;

pub use idx::{load_idx, load_idx_labels, write_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use image::rotate_image;
pub use noisy::{make_noisy_mnist, pick_partner, LabelIndex, SplitSizes};
pub use synth::{generate_two_view, generate_two_view_with_angles, glyph_prototype, SynthConfig};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const META_FILE: &str = "meta.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Tune,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Tune, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Tune => "tune",
            Split::Test => "test",
        }
    }
}

/// Row indices of each split.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Splits {
    pub train: Vec<usize>,
    pub tune: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Consecutive blocks `[0, a)`, `[a, a + b)`, `[a + b, a + b + c)`.
    pub fn contiguous(train: usize, tune: usize, test: usize) -> Splits {
        Splits {
            train: (0..train).collect(),
            tune: (train..train + tune).collect(),
            test: (train + tune..train + tune + test).collect(),
        }
    }

    pub fn get(&self, s: Split) -> &[usize] {
        match s {
            Split::Train => &self.train,
            Split::Tune => &self.tune,
            Split::Test => &self.test,
        }
    }
}

/// Paired observations `(x_i, y_i)` with optional labels and named splits.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoViewDataset {
    /// View 1, `[N, d_x]`.
    pub x: Tensor,
    /// View 2, `[N, d_y]`.
    pub y: Tensor,
    pub labels: Option<Vec<usize>>,
    pub splits: Splits,
    /// Side length when both views are square images.
    pub image_side: Option<usize>,
    /// Seed that generated the data, if any.
    pub seed: Option<u64>,
}

/// Rows of one split.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitView {
    pub x: Tensor,
    pub y: Tensor,
    pub labels: Option<Vec<usize>>,
}

impl TwoViewDataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks row counts, split disjointness and bounds, and the pixel range
    /// of image datasets.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.x.shape().len() != 2 || self.y.shape().len() != 2 || self.y.rows() != n {
            return Err(Error::shape("dataset", format!("x {:?} vs y {:?}", self.x.shape(), self.y.shape())));
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(Error::shape("dataset", format!("{} labels for {n} rows", l.len())));
            }
        }
        let mut seen = vec![false; n];
        for s in Split::ALL {
            for &i in self.splits.get(s) {
                if i >= n {
                    return Err(Error::Config(format!("{} split index {i} out of {n}", s.name())));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Config(format!("index {i} appears in more than one split")));
                }
            }
        }
        if self.image_side.is_some() {
            let ok = |t: &Tensor| t.data().iter().all(|v| (0.0..=1.0).contains(v));
            if !ok(&self.x) || !ok(&self.y) {
                return Err(Error::Config("image dataset has pixels outside [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn split(&self, s: Split) -> Result<SplitView> {
        let idx = self.splits.get(s);
        if idx.is_empty() {
            return Err(Error::Config(format!("{} split is empty", s.name())));
        }
        Ok(SplitView {
            x: self.x.select_rows(idx)?,
            y: self.y.select_rows(idx)?,
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    format_version: u32,
    n: usize,
    d_x: usize,
    d_y: usize,
    image_side: Option<usize>,
    seed: Option<u64>,
    has_labels: bool,
    splits: Splits,
}

fn write_f64s(path: &Path, values: impl Iterator<Item = f64>) -> Result<()> {
    let bytes: Vec<u8> = values.flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes)?;
    Ok(())
}

fn read_f64s(path: &Path, count: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != count * 8 {
        return Err(Error::Config(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            count * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Writes `x.bin`, `y.bin`, optional `labels.bin` (little-endian f64,
/// row-major) and `meta.json` into `dir`, creating it if needed.
pub fn save_dataset(dir: &Path, ds: &TwoViewDataset) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir)?;
    write_f64s(&dir.join("x.bin"), ds.x.data().iter().copied())?;
    write_f64s(&dir.join("y.bin"), ds.y.data().iter().copied())?;
    if let Some(l) = &ds.labels {
        write_f64s(&dir.join("labels.bin"), l.iter().map(|&v| v as f64))?;
    }
    let meta = Meta {
        format_version: DATASET_FORMAT_VERSION,
        n: ds.len(),
        d_x: ds.x.last_dim(),
        d_y: ds.y.last_dim(),
        image_side: ds.image_side,
        seed: ds.seed,
        has_labels: ds.labels.is_some(),
        splits: ds.splits.clone(),
    };
    fs::write(dir.join(META_FILE), serde_json::to_string(&meta)? + "\n")?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<TwoViewDataset> {
    let meta: Meta = serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)?;
    if meta.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Config(format!("unsupported dataset format version {}", meta.format_version)));
    }
    let x = Tensor::from_vec(&[meta.n, meta.d_x], read_f64s(&dir.join("x.bin"), meta.n * meta.d_x)?)?;
    let y = Tensor::from_vec(&[meta.n, meta.d_y], read_f64s(&dir.join("y.bin"), meta.n * meta.d_y)?)?;
    let labels = if meta.has_labels {
        Some(read_f64s(&dir.join("labels.bin"), meta.n)?.into_iter().map(|v| v as usize).collect())
    } else {
        None
    };
    let ds = TwoViewDataset { x, y, labels, splits: meta.splits, image_side: meta.image_side, seed: meta.seed };
    ds.validate()?;
    Ok(ds)
}
