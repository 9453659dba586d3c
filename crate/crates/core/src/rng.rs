//! Counter-based randomness streams.
//!
//! Every random draw in a run is taken from a ChaCha8 stream whose key is the
//! tuple `(master seed, point, phase, lane, chunk)`. Streams never depend on
//! scheduling, so results are identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Which part of a detection run a stream feeds. Distinct phases never share
/// a key, so selection-phase samples are never reused by the final test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Phase {
    /// Mechanism executions used by the event selector.
    Select = 1,
    /// Binomial thinning draws while scoring candidate events.
    SelectThinning = 2,
    /// Fresh mechanism executions for the final hypothesis test.
    Detect = 3,
    /// Binomial thinning draws for the final p-values.
    DetectThinning = 4,
    /// Free for callers outside the detector.
    User = 255,
}

/// Identifies a single stream under a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub point: u64,
    pub phase: Phase,
    pub lane: u64,
}

impl StreamKey {
    pub fn new(seed: u64, point: u64, phase: Phase, lane: u64) -> Self {
        Self {
            seed,
            point,
            phase,
            lane,
        }
    }

    pub fn with_phase(self, phase: Phase) -> Self {
        Self { phase, ..self }
    }

    pub fn with_lane(self, lane: u64) -> Self {
        Self { lane, ..self }
    }

    /// The generator for chunk `chunk` of this stream.
    pub fn rng(&self, chunk: u64) -> StreamRng {
        // lane keeps 56 bits; the phase tag owns the top byte.
        debug_assert!(self.lane < 1 << 56, "lane index overflow");
        let tagged = ((self.phase as u64) << 56) | (self.lane & ((1 << 56) - 1));
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.point.to_le_bytes());
        key[16..24].copy_from_slice(&tagged.to_le_bytes());
        key[24..].copy_from_slice(&chunk.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

/// Lane encoding for mechanism executions: which candidate tuple and which side.
pub fn side_lane(tuple: usize, side: usize) -> u64 {
    ((tuple as u64) << 1) | (side as u64 & 1)
}
