//! Seeded, portable random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Concrete generator used everywhere in the crate.
pub type Rng64 = ChaCha8Rng;

/// A seed plus the algorithm it feeds. Same handle, same stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngHandle {
    pub seed: u64,
    pub algorithm: RngAlgorithm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RngAlgorithm {
    ChaCha8,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            algorithm: RngAlgorithm::ChaCha8,
        }
    }

    /// Fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> Rng64 {
        match self.algorithm {
            RngAlgorithm::ChaCha8 => ChaCha8Rng::seed_from_u64(self.seed),
        }
    }

    /// Independent substream keyed by `tag`. ChaCha streams with different
    /// stream ids never overlap.
    pub fn substream(&self, tag: u64) -> Rng64 {
        let mut rng = self.rng();
        rng.set_stream(tag);
        rng
    }

    /// Child handle whose seed is a mix of this seed and `tag`.
    pub fn derive(&self, tag: u64) -> RngHandle {
        RngHandle {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15))),
            algorithm: self.algorithm,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
