//! Confidence intervals and reproducible random streams.
//!
//! Monte Carlo work is split into fixed-size chunks of trials. Chunk `k` of a
//! run seeded with `seed` draws from `ChaCha8Rng::seed_from_u64(seed)` with
//! its stream set to `k + 1` (stream 0 is reserved for single-threaded draws
//! such as frozen symbols). Since the chunking does not depend on the
//! thread pool, results are identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const TRIALS_PER_CHUNK: u64 = 256;

/// z-score of the two-sided 95% normal interval.
pub const Z95: f64 = 1.959_963_984_540_054;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run `trials` trials in deterministic chunks and return the per-chunk
/// results in chunk order.
pub fn run_chunked<T, F>(trials: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync + Send,
{
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let count = TRIALS_PER_CHUNK.min(trials - k * TRIALS_PER_CHUNK);
            let mut rng = stream_rng(seed, k + 1);
            f(&mut rng, count)
        })
        .collect()
}

/// Wilson score interval for a binomial proportion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wilson {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Wilson {
    pub fn new(successes: u64, trials: u64) -> Wilson {
        Wilson::with_z(successes, trials, Z95)
    }

    pub fn with_z(successes: u64, trials: u64, z: f64) -> Wilson {
        if trials == 0 {
            return Wilson {
                estimate: 0.0,
                lower: 0.0,
                upper: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Wilson {
            estimate: p,
            lower: if successes == 0 {
                0.0
            } else {
                (centre - half).max(0.0)
            },
            upper: if successes >= trials {
                1.0
            } else {
                (centre + half).min(1.0)
            },
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }
}
