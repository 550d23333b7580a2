//! Deterministic seed derivation for independent random substreams.
//!
//! Every stochastic step draws from its own `ChaCha8Rng` whose seed is a pure
//! function of a master seed and a path of integers (stream tag, sample size,
//! replicate index, ...). Replicates therefore never share state and can run
//! in any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_DESIGN: u64 = 1;
pub const STREAM_PREDICTORS: u64 = 2;
pub const STREAM_RESPONSES: u64 = 3;
pub const STREAM_NOISE: u64 = 4;
pub const STREAM_COLLINEAR: u64 = 5;
pub const STREAM_TRUTH: u64 = 6;
pub const STREAM_REPLICATE: u64 = 7;
pub const STREAM_HELD_OUT: u64 = 8;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `path` into `master` one component at a time.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
