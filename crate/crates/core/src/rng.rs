//! Seeding conventions.
//!
//! All randomness comes from ChaCha8. A batch built from seed `s` gives item
//! `i` its own generator, `ChaCha8Rng::seed_from_u64(s)` switched to stream
//! `i`, so item `i` is reproducible regardless of batch size or thread count.
//! Component seeds are derived from a master seed by hashing the seed together
//! with a label.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed for the component called `label`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
