//! Counter-derived random streams.
//!
//! A [`SeedStream`] is a position in a tree of seeds: `master -> replicate ->
//! stage -> row`. Children are derived by mixing the parent seed with a
//! counter, so the numbers a stage sees do not depend on how many draws any
//! other stage made, or on the order in which parallel work ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream(u64);

impl SeedStream {
    pub fn new(master: u64) -> Self {
        SeedStream(splitmix64(master ^ 0x6d6f_6461_6c6d_7321))
    }

    /// Derived sub-stream number `index`.
    pub fn child(self, index: u64) -> Self {
        SeedStream(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
