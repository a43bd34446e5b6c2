//! Reproducible random streams.
//!
//! A stream is a ChaCha8 generator keyed by the 64-bit master seed and
//! positioned on ChaCha stream `stream_id`. Per-frame streams use
//! `stream_id = frame << 8 | purpose`, so every (frame, purpose) pair draws an
//! independent sequence regardless of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

/// What a stream is used for within one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Channel = 1,
    Data = 2,
    Noise = 3,
    Csi = 4,
    Priors = 5,
    Misc = 6,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngSpec {
            master_seed,
            stream_id,
        }
    }

    /// Stream for `purpose` within frame `frame`.
    pub fn for_frame(master_seed: u64, frame: u64, purpose: Purpose) -> Self {
        RngSpec::new(master_seed, (frame << 8) | purpose as u64)
    }

    /// Derived sub-stream, used when one purpose needs several independent draws.
    pub fn substream(&self, index: u64) -> Self {
        RngSpec::new(
            self.master_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            self.stream_id,
        )
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
