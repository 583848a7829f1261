//! Seed derivation for reproducible random streams.
//!
//! Every random stream in the crate is a `ChaCha20Rng` seeded from a 64-bit value.
//! Child seeds are derived from a parent seed and a counter with SplitMix64, so a
//! replicate can be regenerated in isolation from its recorded seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Name of the generator, recorded in report headers.
pub const GENERATOR_NAME: &str = "ChaCha20Rng (rand_chacha 0.9) seeded via seed_from_u64; child seeds by SplitMix64";

pub type Rng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `counter` under `parent`.
pub fn derive_seed(parent: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ counter.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
