//! Seeded random streams.
//!
//! Every consumer of randomness asks for a `(seed, stream)` pair. ChaCha
//! streams with the same key never overlap, so work split across threads
//! draws the same numbers as a serial run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a 32-bit tag and a 32-bit index into one stream id.
pub fn stream_id(tag: u32, index: u32) -> u64 {
    (u64::from(tag) << 32) | u64::from(index)
}
