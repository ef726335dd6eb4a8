//! Deterministic, splittable random number stream.
//!
//! Built on ChaCha12: the same seed always reproduces the same draws, and
//! [`RngStream::substream`] derives independent streams by index, so parallel
//! replications stay reproducible regardless of worker count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// A seeded stream of uniform and standard-normal variates.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha12Rng,
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(0);
        RngStream { rng, seed }
    }

    /// Derive the `index`-th independent substream of the same seed.
    /// Substream indices are offset from the root stream, so
    /// `substream(i)` never collides with the parent.
    pub fn substream(&self, index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(index.wrapping_add(1));
        RngStream {
            rng,
            seed: self.seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in the open interval (0, 1); safe to feed into inverse
    /// CDFs.
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Uniform index in `0..n`.
    pub fn pick(&mut self, n: usize) -> usize {
        assert!(n > 0, "pick: empty range");
        let idx = (self.uniform() * n as f64) as usize;
        idx.min(n - 1)
    }
}
