//! Seeded random streams.
//!
//! Every random consumer draws from its own ChaCha8 stream identified by
//! `(seed, stream)`, so results never depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream identifiers used inside the crate. Callers deriving their own
/// streams should stay above [`USER_STREAM_BASE`].
pub mod streams {
    pub const THETA_STAR: u64 = 1;
    pub const FEATURES: u64 = 2;
    pub const LABELS: u64 = 3;
    pub const ROTATION: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const SAMPLING: u64 = 6;
    pub const OUTPUT_ITERATE: u64 = 7;
    pub const PROBES: u64 = 8;
    pub const POPULATION: u64 = 9;
}

pub const USER_STREAM_BASE: u64 = 1 << 32;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a base seed with an identifier (run index, probe index, ...) into a
/// new seed. SplitMix64 finalizer.
pub fn derive_seed(seed: u64, id: u64) -> u64 {
    let mut z = seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
