//! Deterministic seed derivation.
//!
//! All randomness flows from one 64-bit seed. Trial `i` of a campaign seeded
//! with `s` uses `splitmix64(s ^ splitmix64(i))`; roles inside a run (P oracle,
//! Q oracle, taming coin) get further independent streams the same way.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags for the randomness consumers of one tester run.
pub mod stream {
    pub const P_ORACLE: u64 = 0x5045_4f52_4143_4c45;
    pub const Q_ORACLE: u64 = 0x5145_4f52_4143_4c45;
    pub const TAMING: u64 = 0x5441_4d49_4e47_0000;
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    rng_from_seed(trial_seed(seed, stream))
}
