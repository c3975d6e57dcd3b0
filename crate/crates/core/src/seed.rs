//! Deterministic per-stage seed derivation from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default master seed used when none is configured.
pub const DEFAULT_SEED: u64 = 0x1E15_C0DE;

/// Derives a stage seed by hashing the stage name (FNV-1a) into the master
/// seed and finishing with a SplitMix64 round.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(master ^ h)
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded random source shared by every randomized stage.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
