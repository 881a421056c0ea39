//! Seeded random sources for reproducible simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every simulation draw.
pub type SimRng = ChaCha8Rng;

/// Independent generator for `(seed, stream)`.
///
/// Distinct stream indices give non-overlapping ChaCha streams for the same
/// seed, so trials can be scheduled on any worker without changing results.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index for `(sweep point, trial)` pairs.
pub fn trial_stream(point: usize, trial: usize) -> u64 {
    ((point as u64) << 40) | trial as u64
}
