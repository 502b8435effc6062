//! Seeded random sources. Every consumer derives its generator from a
//! `(seed, stream)` pair so parallel work is reproducible regardless of
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream used for drawing data inside a replication.
pub const DATA_STREAM: u64 = 0;
/// Stream used for calibration draws of a limit law.
pub const CALIBRATION_STREAM: u64 = 1;
/// Stream used for bootstrap resampling.
pub const BOOTSTRAP_STREAM: u64 = 2;

pub fn rng_for(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
