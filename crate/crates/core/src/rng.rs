//! Counter-based seeding.
//!
//! Sample `i` of a run with base seed `b` draws from the ChaCha generator
//! keyed by `(b, i)`, on stream `stream`. Different `(b, i)` pairs give
//! unrelated generators, so runs with nearby base seeds do not share draws,
//! and distinct streams of one sample let it own several fields.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

pub fn sample_rng(base_seed: u64, index: u64, stream: u64) -> SampleRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> SampleRng {
    sample_rng(seed, 0, 0)
}

/// A seed for sample `index` of a run, for APIs that take a single `u64`.
pub fn sample_seed(base_seed: u64, index: u64) -> u64 {
    sample_rng(base_seed, index, 1).next_u64()
}
