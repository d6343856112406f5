//! Seeded deterministic random streams with child-stream derivation.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Deterministic 64-bit seeded generator. Identical seed and call sequence
/// give identical outputs; child streams are derived by index and are
/// statistically independent of the parent and of each other.
#[derive(Clone, Debug)]
pub struct SeedRng {
    seed: u64,
    inner: ChaCha12Rng,
}

// splitmix64 finalizer, used to whiten (seed, index) pairs into child seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedRng {
    pub fn new(seed: u64) -> Self {
        SeedRng {
            seed,
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Child stream `index` of this generator's seed. Independent of how much
    /// of the parent stream has been consumed.
    pub fn child(&self, index: u64) -> SeedRng {
        SeedRng::new(mix(self.seed ^ mix(index.wrapping_add(1))))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform integer in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.inner.random_range(0..n)
    }

    pub fn u64(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }

    /// Uniform f64 in `[0, 1)`.
    pub fn f64(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn bool(&mut self, p: f64) -> bool {
        self.inner.random_bool(p.clamp(0.0, 1.0))
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }
}

impl RngCore for SeedRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
