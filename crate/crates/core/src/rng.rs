//! Seed derivation for independent random streams.
//!
//! Every stochastic component (chain, replication, source generator) gets its
//! own `ChaCha8Rng` seeded from a master seed and a path of integer tags, so
//! streams never overlap and adding a consumer never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const TAG_CHAIN: u64 = 0x6368_6169_6e00_0000;
pub const TAG_SPLIT: u64 = 0x7370_6c69_7400_0000;
pub const TAG_BETA_VAL: u64 = 0x6276_616c_0000_0000;
pub const TAG_REPLICATION: u64 = 0x7265_706c_0000_0000;
pub const TAG_TARGET: u64 = 0x7461_7267_0000_0000;
pub const TAG_SOURCE: u64 = 0x736f_7572_0000_0000;
pub const TAG_COEFFICIENTS: u64 = 0x636f_6566_0000_0000;
pub const TAG_SOURCE_FIT: u64 = 0x7366_6974_0000_0000;
pub const TAG_TARGET_FIT: u64 = 0x7466_6974_0000_0000;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a tag path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}
