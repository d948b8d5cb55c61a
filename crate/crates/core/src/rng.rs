//! Seeded, splittable randomness.
//!
//! Every stochastic routine in the library takes a `SimRng` (or a seed that
//! becomes one) so that runs are reproducible bit for bit. Streams make the
//! generator splittable: `rng_stream(seed, k)` yields independent generators
//! for the same master seed, so parallel or staged code can draw without
//! coupling its consumption order to anything else.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Master generator for a run.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under the same master seed.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
