use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use super::image::rotate_image;
use super::{Split, Splits, TwoViewDataset};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train: usize,
    pub tune: usize,
    pub test: usize,
}

impl SplitSizes {
    /// 50K/10K/10K, for the 70K images of full MNIST (training file first).
    pub const MNIST: SplitSizes = SplitSizes { train: 50_000, tune: 10_000, test: 10_000 };
}

/// Row indices of each label within one split.
#[derive(Clone, Debug, Default)]
pub struct LabelIndex {
    by_label: BTreeMap<usize, Vec<usize>>,
}

impl LabelIndex {
    pub fn new(rows: &[usize], labels: &[usize]) -> LabelIndex {
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in rows {
            by_label.entry(labels[i]).or_default().push(i);
        }
        LabelIndex { by_label }
    }

    pub fn rows(&self, label: usize) -> &[usize] {
        self.by_label.get(&label).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Draws a partner row with the same label uniformly, excluding `own` when
/// another candidate exists. Only the label and the random stream influence
/// the draw (rejection of `own` aside), never the row's content.
pub fn pick_partner(index: &LabelIndex, label: usize, own: usize, rng: &mut RngState) -> Result<usize> {
    let rows = index.rows(label);
    match rows {
        [] => Err(Error::InvalidArgument(format!("no rows with label {label}"))),
        [only] => {
            log::warn!("label {label} has a single instance; pairing row {own} with itself");
            Ok(*only)
        }
        _ => loop {
            let j = rows[rng.below(rows.len())];
            if j != own {
                return Ok(j);
            }
        },
    }
}

/// Builds the noisy two-view dataset from labeled `[N, s, s]` (or `[N, s*s]`)
/// images in `[0, 1]`: view 1 is each image rotated by an angle uniform on
/// `[-pi/4, pi/4]`; view 2 is a random same-label image from the same split
/// plus uniform `[0, 1]` pixel noise, truncated to `[0, 1]`. Splits are
/// consecutive blocks in input order.
pub fn make_noisy_mnist(images: &Tensor, labels: &[usize], seed: u64, sizes: SplitSizes) -> Result<TwoViewDataset> {
    let n = images.shape()[0];
    let d = images.numel() / n;
    let side = (d as f64).sqrt().round() as usize;
    if side * side != d {
        return Err(Error::shape("make_noisy_mnist", format!("{d} pixels per image is not a square")));
    }
    if labels.len() != n {
        return Err(Error::shape("make_noisy_mnist", format!("{} labels for {n} images", labels.len())));
    }
    let total = sizes.train + sizes.tune + sizes.test;
    if total > n || total == 0 {
        return Err(Error::Config(format!("split sizes {sizes:?} need 1..={n} images")));
    }
    if images.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("images must lie in [0, 1]".into()));
    }
    let splits = Splits::contiguous(sizes.train, sizes.tune, sizes.test);
    let root = RngState::new(seed);
    let mut x = vec![0.0; total * d];
    let mut y = vec![0.0; total * d];
    for s in Split::ALL {
        let rows = splits.get(s);
        let index = LabelIndex::new(rows, labels);
        for &i in rows {
            let mut rng = root.substream(i as u64);
            let angle = -FRAC_PI_4 + 2.0 * FRAC_PI_4 * rng.uniform01();
            let img = &images.data()[i * d..(i + 1) * d];
            x[i * d..(i + 1) * d].copy_from_slice(&rotate_image(img, side, angle));
            let j = pick_partner(&index, labels[i], i, &mut rng)?;
            let partner = &images.data()[j * d..(j + 1) * d];
            for (out, &p) in y[i * d..(i + 1) * d].iter_mut().zip(partner) {
                *out = (p + rng.uniform01()).clamp(0.0, 1.0);
            }
        }
    }
    Ok(TwoViewDataset {
        x: Tensor::from_vec(&[total, d], x)?,
        y: Tensor::from_vec(&[total, d], y)?,
        labels: Some(labels[..total].to_vec()),
        splits,
        image_side: Some(side),
        seed: Some(seed),
    })
}
