//! Seed derivation for reproducible, order-independent sampling.
//!
//! Every sample, caption, edit, and training step draws from its own RNG
//! seeded by `derive_seed(global, index, stream)`, so work can be
//! parallelized over indices without changing results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby inputs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent sub-seed for item `index` of the named stream.
pub fn derive_seed(global: u64, index: u64, stream: &str) -> u64 {
    let mut h = splitmix64(global);
    for b in stream.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ splitmix64(index))
}

/// ChaCha8 RNG for item `index` of the named stream.
pub fn stream_rng(global: u64, index: u64, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global, index, stream))
}
