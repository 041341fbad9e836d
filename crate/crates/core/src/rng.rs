//! Counter-addressable uniform stream.
//!
//! Draw `i` of a stream depends only on `(seed, i)`: the ChaCha8 keystream is
//! seeked to word `4 i`, so any split of an index range over workers yields
//! the same numbers as a sequential pass.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS_PER_PAIR: u128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformStream {
    seed: u64,
}

/// Map 52 random bits to the open interval `(0, 1)`.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform pair number `index`.
    pub fn pair(&self, index: u64) -> (f64, f64) {
        self.pairs(index, 1).next().expect("one pair")
    }

    /// `count` consecutive pairs starting at `start`.
    pub fn pairs(&self, start: u64, count: usize) -> impl Iterator<Item = (f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(start as u128 * WORDS_PER_PAIR);
        (0..count).map(move |_| {
            let a = open_unit(rng.next_u64());
            let b = open_unit(rng.next_u64());
            (a, b)
        })
    }
}
