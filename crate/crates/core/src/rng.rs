//! Seed derivation for independent, reproducible random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded by
//! [`derive_seed`] over a base seed and a list of stream tags (realization
//! index, iteration block, purpose...). Streams never depend on thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purpose tags. Kept distinct so two consumers of the same base seed
/// never share a stream.
pub mod stream {
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const SYMBOLS: u64 = 0x5359_4d42;
    pub const ITERATIONS: u64 = 0x4954_4552;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const NOISE: u64 = 0x4e4f_4953;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of tags into a new 64-bit seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream_rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}
