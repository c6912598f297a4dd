use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::DroopError;

/// Which command channels carry the watermark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WatermarkChannels {
    pub p: bool,
    pub q: bool,
}

impl Default for WatermarkChannels {
    fn default() -> Self {
        Self { p: true, q: true }
    }
}

/// Seeded i.i.d. Gaussian excitation, `e ~ N(0, variance I2)`, with a full draw log.
#[derive(Debug, Clone)]
pub struct WatermarkSource {
    pub variance: f64,
    pub seed: u64,
    pub channels: WatermarkChannels,
    rng: ChaCha20Rng,
    log: Vec<[f64; 2]>,
}

impl WatermarkSource {
    pub fn new(variance: f64, seed: u64) -> Result<Self, DroopError> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(DroopError::Config(format!("watermark variance must be non-negative, got {variance}")));
        }
        Ok(Self {
            variance,
            seed,
            channels: WatermarkChannels::default(),
            rng: ChaCha20Rng::seed_from_u64(seed),
            log: Vec::new(),
        })
    }

    pub fn with_channels(mut self, channels: WatermarkChannels) -> Self {
        self.channels = channels;
        self
    }

    /// Draws the next 2-vector and appends it to the log.
    pub fn draw(&mut self) -> [f64; 2] {
        let e = if self.variance == 0.0 {
            [0.0, 0.0]
        } else {
            let n = Normal::new(0.0, self.variance.sqrt()).expect("finite variance");
            let a = n.sample(&mut self.rng);
            let b = n.sample(&mut self.rng);
            [
                if self.channels.p { a } else { 0.0 },
                if self.channels.q { b } else { 0.0 },
            ]
        };
        self.log.push(e);
        e
    }

    pub fn log(&self) -> &[[f64; 2]] {
        &self.log
    }

    pub fn last(&self) -> Option<[f64; 2]> {
        self.log.last().copied()
    }

    /// Keeps memory bounded in long runs: drops everything but the last `keep` draws.
    pub fn truncate_log(&mut self, keep: usize) {
        if self.log.len() > keep {
            self.log.drain(..self.log.len() - keep);
        }
    }
}

/// Adds the next watermark draw to a `(dP, dQ)` command.
pub fn inject_watermark(cmd: (f64, f64), wm: &mut WatermarkSource) -> (f64, f64) {
    let e = wm.draw();
    (cmd.0 + e[0], cmd.1 + e[1])
}
