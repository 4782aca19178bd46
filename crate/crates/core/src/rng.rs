//! Named, hierarchical seed streams.
//!
//! Every random draw in the pipeline comes from a `SeedStream` derived from a
//! single top-level seed by labels and indices. Two streams with different
//! paths are independent, so adding or removing one consumer never shifts
//! another consumer's draws, and parallel scheduling cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream(u64);

impl SeedStream {
    pub const fn new(seed: u64) -> Self {
        SeedStream(seed)
    }

    pub fn key(self) -> u64 {
        self.0
    }

    pub fn child(self, label: &str) -> Self {
        SeedStream(splitmix(self.0 ^ fnv1a(label.as_bytes())))
    }

    pub fn index(self, i: u64) -> Self {
        SeedStream(splitmix(self.0.wrapping_add(splitmix(i ^ 0x5851_f42d_4c95_7f2d))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
