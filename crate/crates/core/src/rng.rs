//! Per-particle random streams.
//!
//! Every particle owns independent streams of a counter-based generator
//! (ChaCha8). The key is derived from the master seed; the 64-bit stream
//! id packs the particle index with a tag, so each `(seed, particle, tag)`
//! triple addresses a distinct, reproducible sequence regardless of the
//! order in which particles are processed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which per-particle stream a draw comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    /// Neighbour choices.
    Direction = 0,
    /// Move/stay coin of the lazy variant.
    Laziness = 1,
}

/// A reproducible random stream for one particle and one purpose.
#[derive(Clone, Debug)]
pub struct ParticleStream {
    inner: ChaCha8Rng,
}

impl ParticleStream {
    pub fn new(seed: u64, particle: u64, tag: StreamTag) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(particle.wrapping_mul(2).wrapping_add(tag as u64));
        Self { inner }
    }

    /// Uniform float in `[0, 1)` from a single 64-bit draw.
    pub fn next_unit(&mut self) -> f64 {
        unit_from_draw(self.inner.next_u64())
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl RngCore for ParticleStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Maps one 64-bit draw onto `[0, bound)` by widening multiplication.
/// The bias is at most `bound / 2^64`.
#[inline]
pub fn index_from_draw(draw: u64, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    ((draw as u128 * bound as u128) >> 64) as u64
}

#[inline]
pub fn unit_from_draw(draw: u64) -> f64 {
    (draw >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// SplitMix64 finaliser; used to derive replica seeds from a master seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replica `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
