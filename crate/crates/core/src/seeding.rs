//! Named random sub-streams.
//!
//! Every stochastic component draws from a ChaCha stream whose seed is derived
//! from one global seed and a component name, so components can be re-run in
//! isolation and removing one component never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derive a child seed from `parent` and a label.
pub fn substream(parent: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(parent.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(buf)
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(parent: u64, label: &str) -> Rng {
    rng_from(substream(parent, label))
}
