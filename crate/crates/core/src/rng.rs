//! Seeded random streams.
//!
//! Every Monte Carlo consumer derives its generators from a single 64-bit
//! root seed and a stream counter, so a path's randomness depends only on
//! `(seed, path_index)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Number of independent streams reserved per simulated path.
pub const STREAMS_PER_PATH: u64 = 4;

const DIFFUSION: u64 = 0;
const JUMPS_Z: u64 = 1;
const JUMPS_ZB: u64 = 2;
const AUXILIARY: u64 = 3;

/// Generator for stream `stream` under root `seed`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The generators a single path consumes: the Brownian driver and one per
/// subordinator.
#[derive(Debug, Clone)]
pub struct PathRngs<R> {
    pub diffusion: R,
    pub z: R,
    pub zb: R,
}

impl PathRngs<SimRng> {
    pub fn for_path(seed: u64, path_index: u64) -> Self {
        let base = path_index * STREAMS_PER_PATH;
        PathRngs {
            diffusion: substream(seed, base + DIFFUSION),
            z: substream(seed, base + JUMPS_Z),
            zb: substream(seed, base + JUMPS_ZB),
        }
    }
}

/// Extra stream for a path, used by the hedging harness for the part of the
/// stable asset's Brownian motion orthogonal to the model's.
pub fn auxiliary_stream(seed: u64, path_index: u64) -> SimRng {
    substream(seed, path_index * STREAMS_PER_PATH + AUXILIARY)
}
