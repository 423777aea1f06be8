//! Seed derivation.
//!
//! Every random stream in the crate descends from one root seed:
//! root -> per-seed -> per-round -> per-draw. A child seed is the SplitMix64
//! finalizer applied to the parent seed mixed with a stream tag and an index,
//! so streams with different tags or indices never share state and the whole
//! tree is reproducible from the root alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes; stable across platforms and releases.
fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derive a child seed from `parent` for the stream named `tag` at `index`.
pub fn derive_seed(parent: u64, tag: &str, index: u64) -> u64 {
    mix(mix(parent ^ tag_hash(tag)).wrapping_add(index))
}

/// A ChaCha8 generator seeded from a derived seed.
pub fn stream(parent: u64, tag: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(parent, tag, index))
}

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
