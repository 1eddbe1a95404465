//! Deterministic seed derivation for per-item RNG streams.

/// Mix a base seed with an item index using the SplitMix64 finalizer.
///
/// Gives every (seed, index) pair an independent, reproducible sub-seed so
/// parallel per-file or per-fold work is invariant to scheduling order.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
