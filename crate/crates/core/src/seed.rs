//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a tuple of integers hashed
//! into a 64-bit seed, so the stream a replicate sees never depends on
//! scheduling or on which other streams were drawn before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used when deriving child seeds.
pub mod tag {
    pub const PILOT: u64 = 0x5049_4c4f;
    pub const SUBSAMPLE: u64 = 0x5355_4253;
    pub const JAB: u64 = 0x4a41_4200;
    pub const BIAS_SHORT: u64 = 0x4249_4153;
    pub const BIAS_LONG: u64 = 0x4249_414c;
    pub const ORACLE: u64 = 0x4f52_4143;
    pub const SERIES: u64 = 0x5345_5249;
    pub const METHOD: u64 = 0x4d45_5448;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `base` together with an ordered list of tags into a child seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(base), |acc, &t| {
        splitmix64(acc ^ splitmix64(t.wrapping_add(0x632b_e59b_d9b4_e019)))
    })
}

/// The generator used throughout; ChaCha8 output is platform independent.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
