//! Random streams.
//!
//! Every run draws from ChaCha8 keyed by the 64-bit user seed
//! (`ChaCha8Rng::seed_from_u64`). Replicate `i` of an ensemble (and point `i`
//! of a sweep) uses stream `i` of that key, so a replicate's randomness depends
//! only on `(seed, i)` and never on scheduling. A single run uses stream 0.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                f()
            }
        },
        _ => f(),
    }
}
