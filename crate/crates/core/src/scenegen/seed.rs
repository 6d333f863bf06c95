//! Seed derivation for reproducible parallel generation.

/// SplitMix64 finalizer.
pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-scene seed: scenes can be generated in any order (or in parallel)
/// and still come out identical for a given base seed.
pub fn scene_seed(base_seed: u64, scene_index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(scene_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}
