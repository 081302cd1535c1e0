//! Reproducible random streams.
//!
//! A [`SimRng`] is a ChaCha8 generator seeded from a 64-bit seed and
//! positioned on one of its 2⁶⁴ independent streams. Studies address work
//! units by `(master seed, domain, index)`; the domain folds into the seed,
//! the index selects the stream. Because a unit's stream never depends on
//! which thread runs it, results are invariant to the degree of parallelism.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SimRng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl SimRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            seed,
            stream,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for SimRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hands out streams derived from a single master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFactory {
    master_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Seed for a domain: distinct domains (purpose tags, levels) get
    /// unrelated ChaCha keys.
    pub fn domain_seed(&self, domain: &[u64]) -> u64 {
        domain
            .iter()
            .fold(mix64(self.master_seed), |acc, &d| mix64(acc ^ mix64(d)))
    }

    pub fn stream(&self, domain: &[u64], index: u64) -> SimRng {
        SimRng::new(self.domain_seed(domain), index)
    }
}
