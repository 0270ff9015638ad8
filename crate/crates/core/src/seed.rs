//! Counter-based seed derivation.
//!
//! `mix(seed, r)` is the `r`-th output of a SplitMix64 generator started at
//! `seed`: `state = seed + (r + 1) * 0x9E3779B97F4A7C15`, followed by the
//! SplitMix64 finalizer. Replicates and sub-streams can therefore be seeded
//! in any order, on any thread, with the same result.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix(seed: u64, r: u64) -> u64 {
    let mut z = seed.wrapping_add(r.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
