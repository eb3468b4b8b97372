//! Deterministic seed derivation.
//!
//! Every random draw in the simulator comes from a `ChaCha8Rng` seeded by a
//! value derived from the master seed and a path of small integers (pixel
//! coordinates, chunk index, stream role). Derived streams are independent of
//! execution order, so parallel loops reproduce serial output bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of labels.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Labels for the independent random streams used inside one simulation unit.
pub(crate) mod role {
    pub const PAIRS: u64 = 1;
    pub const HERALD_DET: u64 = 2;
    pub const FBS: u64 = 3;
    pub const MONITOR_SPLIT: u64 = 4;
    pub const MONITOR_A_DET: u64 = 5;
    pub const MONITOR_B_DET: u64 = 6;
    pub const PIXEL_THIN: u64 = 7;
    pub const IMAGING_SPLIT: u64 = 8;
    pub const IMAGING_A_DET: u64 = 9;
    pub const IMAGING_B_DET: u64 = 10;
    pub const BACKGROUND: u64 = 11;
    pub const COUNTS: u64 = 12;
    pub const CLASSICAL: u64 = 13;
    pub const CLASSICAL_SPLIT: u64 = 14;
    pub const CHUNK: u64 = 15;
    pub const PIXEL: u64 = 16;
    pub const LINE: u64 = 17;
}
