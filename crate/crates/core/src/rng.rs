//! Seed derivation. Every random object in the crate draws from a ChaCha
//! stream addressed by `(base seed, domain, index)`, so replicates can run in
//! any order or on any thread and still produce the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes that consume randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Weights = 1,
    Clocks = 2,
    Edges = 3,
    Limit = 4,
    Brownian = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a domain tag and an index into a fresh 64-bit seed.
pub fn derive_seed(base: u64, domain: Domain, index: u64) -> u64 {
    let a = splitmix64(base ^ splitmix64(domain as u64));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng_for(base: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, domain, index))
}

/// Generator for a seed that has already been derived.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
