//! Seeded random streams.
//!
//! Every stochastic step draws from a ChaCha8 generator keyed by the master
//! seed and a fixed stream id, so each step's draws are independent of how
//! many numbers the other steps consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Communities = 2,
    Init = 3,
    Breeding = 4,
    Synth = 5,
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
