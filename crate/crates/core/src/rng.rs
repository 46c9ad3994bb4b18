//! Seeded random streams.
//!
//! Every generator in the crate draws from ChaCha8 seeded with
//! `seed_from_u64(seed)` and a fixed stream id per consumer, so outputs are
//! identical on every platform and two consumers given the same seed never
//! share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_PINWHEEL: u64 = 1;
pub(crate) const STREAM_SALT_PEPPER: u64 = 2;
pub(crate) const STREAM_BINARY_HV: u64 = 3;
pub(crate) const STREAM_PARTITION: u64 = 4;
pub(crate) const STREAM_KAPPA: u64 = 5;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
