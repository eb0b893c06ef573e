//! Seed derivation.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit seed derived
//! from the master seed and a path of labels (engine name, level, chain
//! index, ...). Streams never depend on evaluation order, which keeps results
//! identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of integer labels into `seed`.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(seed), |acc, &l| splitmix(acc ^ splitmix(l)))
}

/// FNV-1a hash of a textual label, for naming engine streams.
pub fn label(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for the engine called `name` under `seed`.
pub fn named(seed: u64, name: &str) -> u64 {
    derive(seed, &[label(name)])
}

pub fn stream(seed: u64, labels: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive(seed, labels))
}
