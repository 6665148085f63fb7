//! Deterministic random streams.
//!
//! Every random draw in the crate goes through an [`RngSpec`]. A spec maps to
//! a ChaCha8 keystream: the seed selects the key and the stream id selects the
//! 64-bit stream nonce, so distinct stream ids give independent sequences and
//! the same spec always reproduces the same draws regardless of which thread
//! consumes it.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal, StandardUniform, Uniform};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Spec for sub-task `index` of this stream. Children of distinct parents
    /// or distinct indices land on distinct keys.
    pub fn child(&self, index: u64) -> RngSpec {
        RngSpec {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream_id: index,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn standard_normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform draw from `[0, 1)`.
#[inline]
pub fn uniform01(rng: &mut StreamRng) -> f64 {
    StandardUniform.sample(rng)
}

pub fn uniform_range(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Uniform index in `0..n`. Panics when `n == 0`.
pub fn index_below(rng: &mut StreamRng, n: usize) -> usize {
    Uniform::new(0, n).expect("empty index range").sample(rng)
}

/// Index drawn from the (normalized) probability vector `probs`.
pub fn categorical(rng: &mut StreamRng, probs: &[f64]) -> usize {
    let u = uniform01(rng);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave `acc` a hair below 1; fall back to the last
    // category with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::RngCore;

    #[test]
    fn same_spec_same_stream() {
        let spec = RngSpec::new(42, 7);
        let (mut a, mut b) = (spec.rng(), spec.rng());
        for _ in 0..1_000_000 {
            assert_eq!(a.next_u32(), b.next_u32());
        }
    }

    #[test]
    fn stream_ids_differ() {
        let mut a = RngSpec::new(42, 0).rng();
        let mut b = RngSpec::new(42, 1).rng();
        let same = (0..1000).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
        assert_ne!(RngSpec::new(1, 2).child(0), RngSpec::new(1, 3).child(0));
        assert_ne!(RngSpec::new(1, 2).child(0), RngSpec::new(1, 2).child(1));
    }

    #[test]
    fn categorical_respects_point_mass() {
        let mut r = RngSpec::new(3, 0).rng();
        for _ in 0..100 {
            assert_eq!(categorical(&mut r, &[0.0, 1.0, 0.0]), 1);
        }
    }

    #[test]
    fn normal_moments() {
        let mut r = RngSpec::new(9, 0).rng();
        let n = 200_000;
        let xs: std::vec::Vec<f64> = (0..n).map(|_| standard_normal(&mut r)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.01);
        assert!((v - 1.0).abs() < 0.01);
    }
}
