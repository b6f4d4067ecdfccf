//! Seeded random streams.
//!
//! Every random decision in a run derives from one master seed. Components ask
//! for a named sub-stream (optionally keyed by integers such as a vertex id),
//! so the order in which work is scheduled never changes what gets drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for the sub-stream `name` keyed by `keys`.
pub fn derive_seed(seed: u64, name: &str, keys: &[u64]) -> u64 {
    let mut h = splitmix(seed ^ fnv1a(name));
    for &k in keys {
        h = splitmix(h ^ k);
    }
    h
}

pub fn stream(seed: u64, name: &str, keys: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, name, keys))
}
