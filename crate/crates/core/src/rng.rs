//! Reproducible random number generation.
//!
//! All randomness in this crate flows through ChaCha8, a counter-based
//! generator with 2^64 independent streams. A run is identified by a single
//! 64-bit seed; parallel replicates (or rolling-backtest origins) each get
//! their own stream so results do not depend on execution order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of the run identified by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
