//! Deterministic seed derivation.
//!
//! A root seed is expanded into a tree of independent substreams by hashing
//! a path of 64-bit keys with SplitMix64. Each leaf seeds its own ChaCha8
//! generator, so replications never share a stream and the result does not
//! depend on which worker thread draws it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a over UTF-8 bytes; stable across platforms and compiler versions.
pub fn hash_label(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedTree {
    state: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        SeedTree {
            state: splitmix64(root),
        }
    }

    pub fn child(&self, key: u64) -> SeedTree {
        SeedTree {
            state: splitmix64(self.state ^ splitmix64(key.wrapping_add(GOLDEN))),
        }
    }

    pub fn child_label(&self, label: &str) -> SeedTree {
        self.child(hash_label(label))
    }

    pub fn seed(&self) -> u64 {
        self.state
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.state)
    }
}
