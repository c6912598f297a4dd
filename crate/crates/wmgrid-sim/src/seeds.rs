use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::scenario::SeedSection;

const STREAM_PROCESS: u64 = 1;
const STREAM_MEASUREMENT: u64 = 2;
const STREAM_WATERMARK: u64 = 3;
const STREAM_ATTACK: u64 = 4;

/// Seeds of every random stream in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub base: u64,
    pub process: u64,
    pub measurement: u64,
    pub watermark: u64,
    pub attack: u64,
}

/// Independent 64-bit seed for `stream` under `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}

impl SeedSet {
    pub fn from_base(base: u64) -> Self {
        Self {
            base,
            process: derive_seed(base, STREAM_PROCESS),
            measurement: derive_seed(base, STREAM_MEASUREMENT),
            watermark: derive_seed(base, STREAM_WATERMARK),
            attack: derive_seed(base, STREAM_ATTACK),
        }
    }

    pub fn from_section(s: &SeedSection) -> Self {
        let d = Self::from_base(s.base);
        Self {
            base: s.base,
            process: s.process.unwrap_or(d.process),
            measurement: s.measurement.unwrap_or(d.measurement),
            watermark: s.watermark.unwrap_or(d.watermark),
            attack: s.attack.unwrap_or(d.attack),
        }
    }

    /// Seed of the `k`-th unit within a stream, e.g. one watermark source per DGU.
    pub fn sub(seed: u64, k: usize) -> u64 {
        derive_seed(seed, 1000 + k as u64)
    }
}
