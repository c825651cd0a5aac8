//! Reproducible, independently seekable random streams.
//!
//! A [`RandomStream`] names a ChaCha8 key (`seed`) and one of its 2^64
//! independent streams (`stream_id`). Two streams with the same pair replay
//! identical draws no matter which thread consumes them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream keyed by `(self, index)`; children of distinct indices are
    /// distinct streams of the same key.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: mix(self.stream_id ^ mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    /// Stream for replication `rep` at grid point `point`.
    pub fn for_replication(&self, point: u64, rep: u64) -> Self {
        self.substream(point).substream(rep)
    }
}

/// splitmix64 finalizer
pub(crate) fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
