//! Deterministic random streams.
//!
//! Every run derives independent generators from a 64-bit seed: the seed is
//! expanded with SplitMix64 into a xoshiro256++ state, and each purpose gets
//! its own non-overlapping subsequence by applying `jump()` (2^128 steps)
//! a purpose-specific number of times.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Purposes that consume randomness during an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    DataSampling,
    Init,
    Shuffle,
    Bounce,
}

impl Stream {
    fn jumps(self) -> usize {
        match self {
            Stream::DataSampling => 0,
            Stream::Init => 1,
            Stream::Shuffle => 2,
            Stream::Bounce => 3,
        }
    }
}

pub fn stream(seed: u64, purpose: Stream) -> StreamRng {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..purpose.jumps() {
        rng.jump();
    }
    rng
}
