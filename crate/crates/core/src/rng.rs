//! Reproducible random streams.
//!
//! Every realization gets its own seed, derived from `(base_seed, index)` with
//! the SplitMix64 finalizer, and every seed drives ChaCha20 generators whose
//! stream ids separate independent uses (profile draw, matrix draw). Results
//! therefore do not depend on how realizations are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream used for drawing random diagonal profiles.
pub const STREAM_PROFILE: u64 = 1;
/// Stream used for drawing the GUE matrix.
pub const STREAM_MATRIX: u64 = 2;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for realization `index` of a run with `base_seed`.
pub fn realization_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// ChaCha20 generator for `seed` on the given stream.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
