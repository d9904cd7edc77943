//! Deterministic random numbers.
//!
//! The generator is xoshiro256++ seeded through SplitMix64. Substreams are
//! derived from the stream *key* (not the current position): the child key is
//! `avalanche(key ^ avalanche(i + GOLDEN))`, where `avalanche` is the
//! SplitMix64 finalizer. Deriving substream `i` twice always yields the same
//! sequence, regardless of how many values the parent has produced.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
pub fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngState {
    key: u64,
    gen: Xoshiro256PlusPlus,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState {
            key: seed,
            gen: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Key identifying this stream; `RngState::new(key)` restarts it.
    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn substream(&self, i: u64) -> RngState {
        RngState::new(avalanche(self.key ^ avalanche(i.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.gen.gen()
    }

    /// Uniform in [0, 1).
    pub fn uniform01(&mut self) -> f64 {
        self.gen.gen::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.gen.sample(StandardNormal)
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.gen.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.gen);
    }
}

pub fn sample_standard_normal(rng: &mut RngState, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.standard_normal()).collect();
    Tensor::from_vec(shape, data).expect("shape product matches data length")
}

pub fn sample_uniform(rng: &mut RngState, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "uniform range requires finite lo < hi, got [{lo}, {hi})"
        )));
    }
    let n = shape.iter().product();
    let width = hi - lo;
    let data = (0..n)
        .map(|_| {
            let v = lo + width * rng.uniform01();
            // lo + width * u can round up to hi
            if v >= hi {
                hi - (hi - lo) * f64::EPSILON
            } else {
                v
            }
        })
        .collect();
    Tensor::from_vec(shape, data)
}
