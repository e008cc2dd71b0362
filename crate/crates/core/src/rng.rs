//! Deterministic per-block random streams.
//!
//! Every unit of parallel work (a block of chains, a block of Gibbs
//! proposals) draws from its own ChaCha stream keyed by `(seed, block)`.
//! Results are reduced in block order, so outputs depend only on the seed and
//! the sample count, never on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// RNG for work block `block` under master seed `seed`.
pub fn stream(seed: u64, block: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}
