//! Deterministic seed splitting. One user-facing seed is expanded into
//! independent per-component seeds so that every run can be replayed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used by random instance generation.
pub const INSTANCE_STREAM: u64 = 0;
/// Stream used by randomized rounding oracles.
pub const ORACLE_STREAM: u64 = 1;

/// SplitMix64 finalizer applied to `seed` and `stream`.
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    rng_for(split_seed(seed, stream))
}
