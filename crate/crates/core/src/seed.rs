//! Per-sample seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ClothCategory;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one sample. Depends only on its own `(master, category, id)`.
pub fn sample_seed(master: u64, category: ClothCategory, id: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ category.id()) ^ id)
}

/// Independent random streams drawn from one sample seed.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum Stream {
    Template,
    Deform,
    Scene,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Template => 0x7465_6d70,
            Stream::Deform => 0x6465_666f,
            Stream::Scene => 0x7363_656e,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ stream.tag()))
}
