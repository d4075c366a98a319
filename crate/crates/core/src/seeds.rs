//! Deterministic derivation of independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for search-point selection.
pub const STREAM_SELECTION: u64 = 0x5e1e_c710;
/// Stream tag for QSearch's `j` draws and measurements.
pub const STREAM_QSEARCH: u64 = 0x95ea_4c40;
/// Stream tag for planting marked points in synthetic experiments.
pub const STREAM_PLANT: u64 = 0x9_1a47;
/// Stream tag for the measurement draws of the amplification demo.
pub const STREAM_DEMO: u64 = 0xde_0a3f;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `stream` at position `index` under `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index)
}

pub fn derive_rng(base: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, index))
}
