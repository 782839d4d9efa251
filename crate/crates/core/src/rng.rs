//! Named, seedable random streams.
//!
//! Every consumer of randomness asks for a stream by name. The stream seed is
//! `sha256(global_seed || name)`, so adding or removing a consumer never
//! changes what any other consumer draws.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn substream(seed: u64, name: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    StreamRng::from_seed(hasher.finalize().into())
}

/// A `u64` seed for a named consumer that takes a plain seed.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    use rand::RngCore;
    substream(seed, name).next_u64()
}

/// Hex SHA-256 of a byte string. Used for config and model fingerprints.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
