//! Seeded random streams.
//!
//! Every source of randomness in a run is a ChaCha8 generator keyed by the
//! master seed and positioned on a named stream. The 64-bit ChaCha stream id
//! is `(stream tag << 32) | sub`, where `sub` distinguishes e.g. the epoch for
//! shuffling or the sample (train/test) for data generation. Streams never
//! overlap, so adding draws to one purpose never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data = 1,
    Noise = 2,
    Init = 3,
    Shuffle = 4,
    Split = 5,
}

pub fn stream(seed: u64, which: Stream, sub: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((which as u64) << 32) | sub as u64);
    rng
}
