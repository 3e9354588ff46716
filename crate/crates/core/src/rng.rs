//! Seeded, counter-based random number generation.
//!
//! Backed by ChaCha8, whose output is a pure function of (seed, stream, word
//! position). Independent streams are derived with [`RngState::fork`], so a
//! consumer that only needs "the shuffle for epoch 3" never depends on how many
//! numbers some other consumer drew before it.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, Tensor};

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState { seed, stream, rng }
    }

    /// Independent generator for a sub-task. Forking is a pure function of
    /// this generator's seed and stream; it does not advance `self`.
    pub fn fork(&self, label: u64) -> Self {
        let stream = splitmix64(self.stream ^ splitmix64(label.wrapping_add(1)));
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far on this stream.
    pub fn counter(&self) -> u64 {
        self.rng.get_word_pos() as u64
    }

    /// i.i.d. uniform samples in `[lo, hi)`.
    pub fn uniform(&mut self, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidRange { lo, hi });
        }
        let len = Tensor::zeros(shape)?.len();
        let data = (0..len).map(|_| self.rng.gen_range(lo..hi)).collect();
        Tensor::from_vec(shape, data)
    }

    /// Uniform sample in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// A seeded permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Mixes a seed with a label into a fresh seed.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = RngState::new(1).uniform(&[4], 0.0, 1.0).unwrap();
        let b = RngState::new(1).uniform(&[4], 0.0, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn empty_interval_rejected() {
        let mut rng = RngState::new(1);
        assert!(matches!(
            rng.uniform(&[4], 1.0, 1.0),
            Err(Error::InvalidRange { .. })
        ));
        assert!(rng.uniform(&[4], 2.0, 1.0).is_err());
    }

    #[test]
    fn counter_advances() {
        let mut rng = RngState::new(9);
        assert_eq!(rng.counter(), 0);
        rng.uniform(&[3], 0.0, 1.0).unwrap();
        assert_eq!(rng.counter(), 6);
    }

    #[test]
    fn forks_are_independent_of_parent_position() {
        let root = RngState::new(3);
        let mut advanced = root.clone();
        advanced.uniform(&[100], 0.0, 1.0).unwrap();
        let a = root.fork(5).uniform(&[8], 0.0, 1.0).unwrap();
        let b = advanced.fork(5).uniform(&[8], 0.0, 1.0).unwrap();
        assert_eq!(a, b);
        let c = root.fork(6).uniform(&[8], 0.0, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_mean_and_spread() {
        let t = RngState::new(1).uniform(&[10_000], -0.05, 0.05).unwrap();
        assert!(t.mean().abs() < 0.01);
        // Reference moments of U(-0.05, 0.05): variance = 0.1² / 12.
        let var = t.data().iter().map(|v| (v - t.mean()).powi(2)).sum::<f64>() / 10_000.0;
        assert!((var - 0.01 / 12.0).abs() < 0.05 * 0.01 / 12.0, "var {var}");
        assert!(t.data().iter().all(|&v| (-0.05..0.05).contains(&v)));
    }
}
