//! Seed derivation.
//!
//! Every random draw in the toolkit is keyed by a seed derived from the run
//! seed plus stable identifiers (example id, purpose tag). Derivation never
//! depends on call order, so parallel and serial runs see the same streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hash a base seed and a list of string parts into a new 64-bit seed.
///
/// Parts are length-prefixed so `("ab", "c")` and `("a", "bc")` differ.
pub fn stable_hash(base: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hex SHA-256 of a string, used to key scripted mock responses.
pub fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
