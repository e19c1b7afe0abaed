//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, index)`. Monte Carlo loops assign one
//! stream per fixed-size block of samples, so results never depend on how
//! blocks are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples drawn from a single stream in the Monte Carlo drivers.
pub const BLOCK: u64 = 1024;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Number of blocks of size [`BLOCK`] needed for `samples` samples.
pub fn blocks(samples: u64) -> u64 {
    samples.div_ceil(BLOCK)
}

/// Sample indices `[start, end)` covered by block `b`.
pub fn block_range(b: u64, samples: u64) -> std::ops::Range<u64> {
    let start = b * BLOCK;
    start..(start + BLOCK).min(samples)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A uniform in `[0, 1)` that is a pure function of `(seed, key)`.
pub fn keyed_uniform(seed: u64, key: u64) -> f64 {
    let z = mix64(mix64(seed ^ 0x9E37_79B9_7F4A_7C15).wrapping_add(key));
    (mix64(z) >> 11) as f64 / (1u64 << 53) as f64
}

/// Pulls fair bits out of a stream 64 at a time.
pub struct BitSource<'a> {
    rng: &'a mut Stream,
    word: u64,
    left: u32,
}

impl<'a> BitSource<'a> {
    pub fn new(rng: &'a mut Stream) -> Self {
        BitSource { rng, word: 0, left: 0 }
    }

    #[inline]
    pub fn bit(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }

    /// Uniform in `0..n`; powers of two consume bits from the buffer.
    #[inline]
    pub fn below(&mut self, n: u32) -> u32 {
        if n.is_power_of_two() {
            let mut v = 0;
            for i in 0..n.trailing_zeros() {
                v |= (self.bit() as u32) << i;
            }
            v
        } else {
            use rand::Rng;
            self.rng.gen_range(0..n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |index| {
            let mut r = stream(7, index);
            [r.next_u64(), r.next_u64(), r.next_u64()]
        };
        let (a, b, c) = (draw(3), draw(3), draw(4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn block_ranges_cover_samples() {
        let n = 3 * BLOCK + 17;
        let total: u64 = (0..blocks(n)).map(|b| block_range(b, n).count() as u64).sum();
        assert_eq!(total, n);
        assert_eq!(blocks(0), 0);
    }

    #[test]
    fn below_is_uniform() {
        let mut r = stream(1, 0);
        let mut src = BitSource::new(&mut r);
        for n in [1u32, 3, 4, 16] {
            let mut hits = vec![0u32; n as usize];
            for _ in 0..40_000 {
                hits[src.below(n) as usize] += 1;
            }
            let expect = 40_000.0 / n as f64;
            assert!(hits.iter().all(|&h| (h as f64 - expect).abs() < 5.0 * expect.sqrt()));
        }
    }

    #[test]
    fn keyed_uniform_range_and_mean() {
        let mut sum = 0.0;
        for key in 0..100_000u64 {
            let u = keyed_uniform(11, key);
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        assert!((sum / 100_000.0 - 0.5).abs() < 0.005);
    }
}
