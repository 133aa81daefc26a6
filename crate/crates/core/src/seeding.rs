//! Deterministic RNG substream derivation.
//!
//! Every random draw in the toolkit comes from a substream keyed by the
//! global seed plus a list of string tags (utterance id, purpose, grid
//! index). Substreams are independent of scheduling, so per-utterance work
//! can run on any number of threads and still reproduce bit-identical
//! results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// 32-byte seed for `(global_seed, tags...)`. Tags are length-prefixed so
/// distinct tag lists can never collide by concatenation.
pub fn substream_seed(global_seed: u64, tags: &[&str]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    for tag in tags {
        hasher.update((tag.len() as u64).to_le_bytes());
        hasher.update(tag.as_bytes());
    }
    hasher.finalize().into()
}

/// Seeded generator for the given substream.
pub fn substream(global_seed: u64, tags: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(substream_seed(global_seed, tags))
}

/// Collapse a substream seed to a `u64` for APIs that take plain seeds.
pub fn derive_u64(global_seed: u64, tags: &[&str]) -> u64 {
    let bytes = substream_seed(global_seed, tags);
    u64::from_le_bytes(bytes[..8].try_into().unwrap())
}
