use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use super::image::rotate_image;
use super::{Splits, TwoViewDataset};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::tensor::Tensor;

/// Parameters of the synthetic two-view glyph dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "default_classes")]
    pub class_count: usize,
    /// Image side in pixels.
    #[serde(default = "default_side")]
    pub side: usize,
    #[serde(default = "default_train")]
    pub train: usize,
    #[serde(default = "default_eval")]
    pub tune: usize,
    #[serde(default = "default_eval")]
    pub test: usize,
    /// View-1 rotation angles are uniform on this range (radians).
    #[serde(default = "default_rotation")]
    pub rotation_range: (f64, f64),
    /// View-2 additive noise is uniform on this range, per pixel.
    #[serde(default = "default_noise")]
    pub noise_range: (f64, f64),
    /// Standard deviation of the per-instance Gaussian pixel jitter.
    #[serde(default = "default_jitter")]
    pub jitter_sigma: f64,
    /// Standard deviation of the per-instance displacement of every stroke
    /// control point, in half-image units.
    #[serde(default = "default_point_jitter")]
    pub point_jitter: f64,
    /// Per-instance translation is uniform on `[-shift, shift]` per axis, in half-image units.
    #[serde(default = "default_shift")]
    pub shift: f64,
    /// Per-instance scale is uniform on `[1 - scale_jitter, 1 + scale_jitter]`.
    #[serde(default = "default_scale_jitter")]
    pub scale_jitter: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_classes() -> usize {
    10
}
fn default_side() -> usize {
    16
}
fn default_train() -> usize {
    5000
}
fn default_eval() -> usize {
    1000
}
fn default_rotation() -> (f64, f64) {
    (-FRAC_PI_4, FRAC_PI_4)
}
fn default_noise() -> (f64, f64) {
    (0.0, 1.0)
}
fn default_jitter() -> f64 {
    0.1
}
fn default_point_jitter() -> f64 {
    0.1
}
fn default_shift() -> f64 {
    0.15
}
fn default_scale_jitter() -> f64 {
    0.15
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            class_count: default_classes(),
            side: default_side(),
            train: default_train(),
            tune: default_eval(),
            test: default_eval(),
            rotation_range: default_rotation(),
            noise_range: default_noise(),
            jitter_sigma: default_jitter(),
            point_jitter: default_point_jitter(),
            shift: default_shift(),
            scale_jitter: default_scale_jitter(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::Config(format!("class_count must be at least 2, got {}", self.class_count)));
        }
        if self.side < 4 {
            return Err(Error::Config(format!("side must be at least 4, got {}", self.side)));
        }
        if self.train + self.tune + self.test == 0 {
            return Err(Error::Config("dataset would be empty".into()));
        }
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !range_ok(self.rotation_range) || !range_ok(self.noise_range) {
            return Err(Error::Config("rotation and noise ranges must be finite and ordered".into()));
        }
        for (name, v) in [
            ("jitter_sigma", self.jitter_sigma),
            ("point_jitter", self.point_jitter),
            ("shift", self.shift),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.scale_jitter) {
            return Err(Error::Config(format!("scale_jitter must be in [0, 1), got {}", self.scale_jitter)));
        }
        Ok(())
    }
}

/// A stroke primitive in normalized coordinates (`u` right, `v` up, both in `[-1, 1]`).
#[derive(Clone, Copy, Debug)]
enum Stroke {
    Segment((f64, f64), (f64, f64)),
    Ring((f64, f64), f64),
}

impl Stroke {
    /// Applies `f` to every control point; ring radii scale by `scale`.
    fn map(&self, scale: f64, mut f: impl FnMut((f64, f64)) -> (f64, f64)) -> Stroke {
        match *self {
            Stroke::Segment(a, b) => Stroke::Segment(f(a), f(b)),
            Stroke::Ring(c, r) => Stroke::Ring(f(c), r * scale),
        }
    }

    fn distance(&self, p: (f64, f64)) -> f64 {
        match *self {
            Stroke::Segment(a, b) => {
                let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                let len2 = dx * dx + dy * dy;
                let t = if len2 > 0.0 {
                    (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
                (qx * qx + qy * qy).sqrt()
            }
            Stroke::Ring(c, r) => ((p.0 - c.0).hypot(p.1 - c.1) - r).abs(),
        }
    }
}

/// The handcrafted classes. View-1 angles span up to 90 degrees, so no two
/// of these coincide under a relative rotation of 90 degrees or less.
fn strokes(class: usize) -> Vec<Stroke> {
    use Stroke::{Ring, Segment as S};
    match class {
        0 => vec![Ring((0.0, 0.0), 0.65)],
        1 => vec![S((0.0, -0.75), (0.0, 0.75))],
        2 => vec![Ring((0.0, 0.0), 0.28)],
        3 => vec![S((0.0, -0.7), (0.0, 0.7)), S((-0.7, 0.0), (0.7, 0.0))],
        4 => vec![S((-0.4, -0.7), (-0.4, 0.7)), S((0.4, -0.7), (0.4, 0.7))],
        5 => vec![S((-0.5, -0.5), (0.5, -0.5)), S((0.5, -0.5), (0.5, 0.5)), S((0.5, 0.5), (-0.5, 0.5)), S((-0.5, 0.5), (-0.5, -0.5))],
        6 => vec![S((-0.5, 0.7), (-0.5, -0.6)), S((-0.5, -0.6), (0.6, -0.6))],
        7 => vec![S((-0.65, 0.6), (0.65, 0.6)), S((0.0, 0.6), (0.0, -0.75))],
        8 => vec![S((0.0, 0.65), (-0.6, -0.5)), S((-0.6, -0.5), (0.6, -0.5)), S((0.6, -0.5), (0.0, 0.65))],
        9 => vec![Ring((-0.05, 0.35), 0.32), S((0.27, 0.35), (0.27, -0.75))],
        k => {
            // Beyond the handcrafted set: three segments fixed by the class index.
            let mut rng = RngState::new(k as u64);
            let mut p = || 1.4 * rng.uniform01() - 0.7;
            (0..3).map(|_| S((p(), p()), (p(), p()))).collect()
        }
    }
}

/// Noise-free prototype of `class` on a `side x side` grid (row-major, values in `[0, 1]`).
pub fn glyph_prototype(class: usize, side: usize) -> Vec<f64> {
    render(&strokes(class), side)
}

fn render(strokes: &[Stroke], side: usize) -> Vec<f64> {
    let px = 2.0 / side as f64;
    let half_width = 0.6 * px;
    let mut img = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            let p = ((2 * c + 1) as f64 / side as f64 - 1.0, 1.0 - (2 * r + 1) as f64 / side as f64);
            let d = strokes.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min);
            img[r * side + c] = (1.0 - (d - half_width) / px).clamp(0.0, 1.0);
        }
    }
    img
}

fn uniform_in(rng: &mut RngState, (lo, hi): (f64, f64)) -> f64 {
    let v = lo + (hi - lo) * rng.uniform01();
    v.min(hi)
}

/// One handwritten-like instance of `class`: scale, shift, and per-point
/// displacement of the strokes, then clamped Gaussian pixel jitter.
fn instance(class: &[Stroke], cfg: &SynthConfig, rng: &mut RngState) -> Vec<f64> {
    let scale = uniform_in(rng, (1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter));
    let tx = uniform_in(rng, (-cfg.shift, cfg.shift));
    let ty = uniform_in(rng, (-cfg.shift, cfg.shift));
    let strokes: Vec<Stroke> = class
        .iter()
        .map(|st| {
            st.map(scale, |(u, v)| {
                let du = cfg.point_jitter * rng.standard_normal();
                let dv = cfg.point_jitter * rng.standard_normal();
                (scale * u + tx + du, scale * v + ty + dv)
            })
        })
        .collect();
    render(&strokes, cfg.side)
        .into_iter()
        .map(|p| (p + cfg.jitter_sigma * rng.standard_normal()).clamp(0.0, 1.0))
        .collect()
}

/// Generates the dataset and also returns each sample's view-1 rotation angle.
///
/// Sample `i` draws everything from substream `i` of the seed: label,
/// angle, an instance for view 1 (deformed, jittered, clamped, then
/// rotated), and an independent instance of the same class for view 2
/// (deformed, jittered, plus uniform noise, then clamped). The label is the only variable shared by the two views.
pub fn generate_two_view_with_angles(cfg: &SynthConfig) -> Result<(TwoViewDataset, Vec<f64>)> {
    cfg.validate()?;
    let s = cfg.side;
    let n = cfg.train + cfg.tune + cfg.test;
    let glyphs: Vec<Vec<Stroke>> = (0..cfg.class_count).map(strokes).collect();
    let root = RngState::new(cfg.seed);
    let mut x = Vec::with_capacity(n * s * s);
    let mut y = Vec::with_capacity(n * s * s);
    let mut labels = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = root.substream(i as u64);
        let k = rng.below(cfg.class_count);
        let angle = uniform_in(&mut rng, cfg.rotation_range);
        let v1 = instance(&glyphs[k], cfg, &mut rng);
        x.extend(rotate_image(&v1, s, angle));
        let v2 = instance(&glyphs[k], cfg, &mut rng);
        y.extend(v2.into_iter().map(|p| (p + uniform_in(&mut rng, cfg.noise_range)).clamp(0.0, 1.0)));
        labels.push(k);
        angles.push(angle);
    }
    let ds = TwoViewDataset {
        x: Tensor::from_vec(&[n, s * s], x)?,
        y: Tensor::from_vec(&[n, s * s], y)?,
        labels: Some(labels),
        splits: Splits::contiguous(cfg.train, cfg.tune, cfg.test),
        image_side: Some(s),
        seed: Some(cfg.seed),
    };
    Ok((ds, angles))
}

pub fn generate_two_view(cfg: &SynthConfig) -> Result<TwoViewDataset> {
    Ok(generate_two_view_with_angles(cfg)?.0)
}
