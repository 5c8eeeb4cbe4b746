//! Deterministic seed derivation.
//!
//! Sub-seeds are derived by content (node indices, conditioning sets, trial
//! numbers) rather than drawn from a shared sequential stream, so the result
//! of one task never depends on how many other tasks ran before it or on
//! which thread picked it up.

pub(crate) const TAG_SHUFFLE: u64 = 0x5348;
pub(crate) const TAG_GRAPH: u64 = 0x4752;
pub(crate) const TAG_SIM: u64 = 0x5349;
pub(crate) const TAG_TRIAL: u64 = 0x5452;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base` with splitmix64 steps. Stable across platforms.
pub(crate) fn mix(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Order-insensitive digest of a sorted index set.
pub(crate) fn set_digest(sorted: &[usize]) -> u64 {
    sorted
        .iter()
        .fold(0xC0FF_EE00_u64, |acc, &v| splitmix64(acc ^ (v as u64)))
}
