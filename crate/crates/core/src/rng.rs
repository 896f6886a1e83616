//! Reproducible random streams.
//!
//! Every stochastic routine takes a `u64` seed. The generator is ChaCha8
//! (`rand_chacha::ChaCha8Rng`) keyed by `seed_from_u64(seed)`; independent
//! trials use distinct ChaCha stream ids on the same key, so trial `k` of a
//! run always sees the same numbers no matter how trials are scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream` of the run keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval (0, 1).
pub fn open01<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
