//! Seeded random streams.
//!
//! Every randomized computation (probe points, power iteration, pair
//! sampling) draws from a ChaCha stream derived from a run seed and a
//! purpose label, so outputs are reproducible regardless of thread count
//! and no global RNG is ever touched.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Derives an independent stream for (`seed`, `label`).
pub fn stream(seed: u64, label: &str) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    // FNV-1a over the label fills the rest of the key.
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    key[8..16].copy_from_slice(&hash.to_le_bytes());
    key[16..24].copy_from_slice(&hash.rotate_left(17).to_le_bytes());
    key[24..32].copy_from_slice(&(seed ^ hash).to_le_bytes());
    ChaCha12Rng::from_seed(key)
}
