//! Seed fan-out.
//!
//! Every source of randomness in a run descends from one top-level seed
//! through named sub-streams (`init`, `dropout`, `folds`, `synthetic`, ...),
//! so changing how one consumer draws does not perturb the others, and
//! per-sample streams can be derived independently of execution order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A derivable point in the seed tree. Cheap to copy; `rng()` mints the
/// actual generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        RngStream { seed: splitmix64(seed ^ 0x5370_6563_4e65_7421) }
    }

    /// Child stream for a named consumer.
    pub fn derive(&self, label: &str) -> RngStream {
        RngStream { seed: splitmix64(self.seed ^ fnv1a(label.as_bytes())) }
    }

    /// Child stream for an indexed consumer (fold number, sample number,
    /// epoch number, ...).
    pub fn derive_index(&self, index: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x1f83_d9ab_fb41_bd6b),
        }
    }

    /// A fresh generator positioned at the start of this stream. ChaCha keeps
    /// the sequence identical across platforms.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.seed)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
