//! Named random substreams derived from one global seed.
//!
//! Every stochastic stage draws from its own stream so that changing, say,
//! the number of t-SNE iterations never perturbs the train/independent split.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Well-known stream names.
pub mod stream {
    pub const SPLIT: &str = "split";
    pub const INIT: &str = "init";
    pub const DROPOUT: &str = "dropout";
    pub const SHUFFLE: &str = "shuffle";
    pub const BOOTSTRAP: &str = "bootstrap";
    pub const FOLDS: &str = "folds";
    pub const TSNE: &str = "tsne";
    pub const VALIDATION: &str = "validation";
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derive a child seed from a parent seed and a label.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(name)))
}

/// Derive a child seed from a parent seed and an index (per-tree, per-fold).
pub fn derive_indexed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index.wrapping_add(1))))
}

pub fn substream(seed: u64, name: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, name))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
