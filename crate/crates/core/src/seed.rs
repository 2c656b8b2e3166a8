//! Seed derivation.
//!
//! Every stochastic step draws from its own ChaCha8 stream seeded by
//! `derive_seed(master, stage, index)`. The mixing is SplitMix64 applied
//! three times, folding in each component; it is fixed so that recorded
//! seeds replay across versions.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output step.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GAMMA);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for sample `index` of pipeline stage `stage` under `master`.
pub fn derive_seed(master: u64, stage: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stage) ^ index)
}
