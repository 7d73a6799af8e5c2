//! Seedable random streams.
//!
//! Every stochastic routine draws from a [`RandomState`]. Parallel work never
//! shares one: each unit of work derives its own stream from the parent seed
//! and an index with [`RandomState::derive`], so results do not depend on the
//! number of threads or the order in which work items are scheduled.
//!
//! The splitting function is SplitMix64 applied to the parent seed mixed with
//! a SplitMix64 hash of the index; the derived seed feeds a ChaCha8 generator.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the child stream `index` of a stream seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA) ^ 0x5851_F42D_4C95_7F2D))
}

/// A deterministic random stream owned by a single task.
#[derive(Debug, Clone)]
pub struct RandomState {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream; depends only on this stream's seed and `index`,
    /// never on how many values have already been drawn.
    pub fn derive(&self, index: u64) -> RandomState {
        RandomState::new(derive_seed(self.seed, index))
    }

    /// Uniform variate on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits, offset by half an ulp so 0 is excluded.
            let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-40 for any realistic n.
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

impl RngCore for RandomState {
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RandomState::new(42);
        let mut b = RandomState::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derive_ignores_consumption() {
        let a = RandomState::new(7);
        let mut b = RandomState::new(7);
        b.next_u64();
        b.next_u64();
        let mut ca = a.derive(3);
        let mut cb = b.derive(3);
        assert_eq!(ca.next_u64(), cb.next_u64());
        assert_ne!(a.derive(3).next_u64(), a.derive(4).next_u64());
    }

    #[test]
    fn uniform_stays_open() {
        let mut r = RandomState::new(1);
        for _ in 0..10_000 {
            let u = r.uniform_open();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn index_in_range() {
        let mut r = RandomState::new(2);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[r.index(5)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }
}
