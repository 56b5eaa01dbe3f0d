//! Seeded random streams.
//!
//! Every task gets its own stream derived from `(seed, task_id)` by a
//! splitmix64 mix, so sweeps can be split across workers without changing
//! the draws of any individual cell.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// One round of splitmix64.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a task id into a 64-bit substream key.
pub fn derive_key(seed: u64, task_id: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ task_id.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Stream for task `task_id` under base `seed`.
pub fn substream(seed: u64, task_id: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_key(seed, task_id))
}

/// Stream for a task addressed by several coordinates (e.g. `n`, replicate).
pub fn substream_nd(seed: u64, coords: &[u64]) -> Stream {
    let mut k = splitmix64(seed);
    for &c in coords {
        k = derive_key(k, c);
    }
    ChaCha8Rng::seed_from_u64(k)
}

pub fn from_seed(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
