//! Stable seed derivation. All randomness descends from a single global
//! seed through [`derive`], so results do not depend on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a base seed together with an ordered list of keys.
pub fn derive(base: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix(base), |acc, &k| splitmix(acc ^ splitmix(k)))
}

/// Named stream tags, so unrelated consumers never share a stream.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const TRAIN_ATTACK: u64 = 3;
    pub const EVAL_ATTACK: u64 = 4;
    pub const MARGIN: u64 = 5;
    pub const DATA: u64 = 6;
    pub const THEORY: u64 = 7;
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
