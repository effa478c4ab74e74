//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream selected by a
//! seed plus a 64-bit stream id. Content depends only on the key, never on
//! the order in which streams are opened, so parallel schedules reproduce
//! sequential runs bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes under the same key never
/// share random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Gamma = 1,
    Weights = 2,
    Biases = 3,
    Data = 4,
    Noise = 5,
    Shuffle = 6,
    Subsample = 7,
    MonteCarlo = 8,
}

/// Identifies the stream for one (layer, block) slot of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub layer: u32,
    pub block: u32,
}

impl StreamKey {
    pub fn new(seed: u64, layer: u32, block: u32) -> Self {
        Self { seed, layer, block }
    }

    /// Layer ids are truncated to 24 bits.
    pub fn stream_id(&self, purpose: Purpose) -> u64 {
        ((self.layer as u64 & 0xFF_FFFF) << 40) | ((self.block as u64) << 8) | purpose as u64
    }

    pub fn rng(&self, purpose: Purpose) -> ChaCha8Rng {
        stream_rng(self.seed, self.stream_id(purpose))
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
