//! Seeded random streams.
//!
//! Every replicate (field, day, bootstrap draw) gets its own ChaCha stream
//! derived from `(seed, domain, index)`, so results never depend on the order
//! in which workers pick up indices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream domains keep unrelated consumers of one seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Field = 1,
    Noise = 2,
    Stable = 3,
    Bootstrap = 4,
    Scenario = 5,
    Member = 6,
    Thinning = 7,
    Layout = 8,
    Multistart = 9,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let key = mix(seed ^ mix(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derive a child seed, e.g. for handing a sub-task its own seed space.
pub fn child_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    mix(mix(seed ^ mix(domain as u64)) ^ mix(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
