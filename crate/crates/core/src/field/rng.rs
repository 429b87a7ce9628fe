use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Fe, PrimeField};

/// Seeded, replayable randomness for every protocol coin.
///
/// Backed by ChaCha8 (a counter-based stream cipher), so the same seed
/// always yields the same sequence of draws.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for trial `index` of a run seeded with `base`.
    pub fn substream(base: u64, index: u64) -> Self {
        Self::new(base ^ index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A child generator seeded from this stream's next output.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn bit(&mut self) -> bool {
        self.inner.gen()
    }

    /// Bernoulli draw with success probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.inner.gen_bool(p.clamp(0.0, 1.0))
    }

    /// Uniform in `0..n`; `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Uniform element of `field`.
    pub fn elem(&mut self, field: PrimeField) -> Fe {
        field.elem(self.inner.gen_range(0..field.modulus()))
    }

    /// Uniform nonzero element of `field`.
    pub fn nonzero_elem(&mut self, field: PrimeField) -> Fe {
        field.elem(self.inner.gen_range(1..field.modulus()))
    }

    /// Uniform point of `field^n`.
    pub fn point(&mut self, field: PrimeField, n: usize) -> Vec<Fe> {
        (0..n).map(|_| self.elem(field)).collect()
    }
}
