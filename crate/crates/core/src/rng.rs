//! Seeded, splittable randomness and low-discrepancy point sets.
//!
//! Every random draw in the crate comes from a [`SeedTree`]: a master seed
//! plus a stream label. Streams are independent ChaCha8 keystreams, so work
//! split across threads draws the same numbers regardless of scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name of the generator, recorded in run manifests.
pub const GENERATOR_NAME: &str = "ChaCha8 (rand_chacha), stream-per-task";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for stream `stream`; distinct streams never overlap.
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// A child seed: the first word of stream `stream`.
    pub fn derive(&self, stream: u64) -> u64 {
        self.stream(stream).next_u64()
    }
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv;
    }
    value
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// The `index`-th point of the Halton sequence in `[0,1)^D`, `D ≤ 8`.
pub fn halton<const D: usize>(index: u64) -> [f64; D] {
    let mut p = [0.0; D];
    for (d, v) in p.iter_mut().enumerate() {
        *v = radical_inverse(index + 1, PRIMES[d]);
    }
    p
}
