//! Counter-based random streams.
//!
//! A stream is identified by `(master seed, stream index)`. Each pair maps to
//! an independent ChaCha20 keystream, so trial `t` of an experiment draws the
//! same numbers no matter which worker runs it or in which order.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Deterministic random source for one `(master, index)` pair.
#[derive(Debug, Clone)]
pub struct RngStream {
    master: u64,
    index: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(master: u64, index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master);
        rng.set_stream(index);
        Self { master, index, rng }
    }

    /// Stream addressed by a hierarchical path, e.g. `[experiment, trial, slot]`.
    pub fn from_path(master: u64, path: &[u64]) -> Self {
        Self::new(master, stream_index(path))
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Complex standard Gaussian: E|z|² = 1.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a path of labels into a single stream index.
///
/// Distinct paths of the same length map to distinct indices with
/// overwhelming probability; paths of different length never share a prefix
/// hash because the length is mixed in first.
pub fn stream_index(path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(path.len() as u64), |acc, &part| splitmix64(acc ^ splitmix64(part)))
}
