//! Counter-based random streams.
//!
//! Every uniform used by the edge dynamics is a pure function of
//! `(seed, edge, time)`. This lets coupled runs share randomness, lets
//! reruns reproduce bit-identical trajectories, and lets the backward
//! sampler re-read any cell of its window without storing it.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TIME_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const SEED_SALT: u64 = 0x8CB9_2BA7_2F3D_8DD7;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fold a list of tags into a child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(seed ^ SEED_SALT), |acc, &t| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(t.wrapping_add(TIME_SALT)))
    })
}

/// Key shared by all edges at one time step.
#[inline]
pub fn time_key(seed: u64, time: i64) -> u64 {
    mix64(mix64(seed ^ SEED_SALT) ^ mix64((time as u64) ^ TIME_SALT))
}

/// Uniform in `[0, 1)` for `edge` under a precomputed [`time_key`].
///
/// For a fixed time this is the SplitMix64 sequence started at the time key
/// and read at position `edge`.
#[inline]
pub fn keyed_uniform(key: u64, edge: u64) -> f64 {
    to_unit(mix64(key.wrapping_add(edge.wrapping_add(1).wrapping_mul(GOLDEN))))
}

/// Uniform in `[0, 1)` for the cell `(seed, edge, time)`.
#[inline]
pub fn cell_uniform(seed: u64, edge: u64, time: i64) -> f64 {
    keyed_uniform(time_key(seed, time), edge)
}
