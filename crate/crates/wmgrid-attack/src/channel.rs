use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::filter::{FilterState, RationalFilter};
use crate::spec::{AttackSpec, AttackTemplate};
use crate::AttackError;

#[derive(Debug, Clone)]
enum SignalState {
    Passthrough,
    Noise { dist: Option<Normal<f64>>, rng: ChaCha20Rng },
    Replay { capacity: usize, buffer: VecDeque<f64>, frozen: Option<Vec<f64>>, cursor: usize },
    Filter { state: FilterState, dist: Option<Normal<f64>>, rng: ChaCha20Rng },
}

/// Attack state for one DGU: a sub-channel for each of `(omega, V)`.
/// Untargeted signals pass through untouched.
#[derive(Debug, Clone)]
pub struct AttackChannel {
    spec: AttackSpec,
    ts: f64,
    signals: [Option<SignalState>; 2],
    replay_start: f64,
}

fn normal(variance: f64) -> Option<Normal<f64>> {
    (variance > 0.0).then(|| Normal::new(0.0, variance.sqrt()).expect("validated variance"))
}

impl AttackChannel {
    /// `seed` drives the attack's own randomness; each signal gets an independent stream.
    pub fn new(spec: AttackSpec, ts: f64, seed: u64) -> Result<Self, AttackError> {
        spec.validate()?;
        if !(ts > 0.0) {
            return Err(AttackError::Invalid("sample period must be positive".into()));
        }
        let mask = spec.target_signal.mask();
        let mut replay_start = spec.start_time;
        let make = |sig: u64| -> SignalState {
            let rng = ChaCha20Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(sig));
            match &spec.template {
                AttackTemplate::Passthrough => SignalState::Passthrough,
                AttackTemplate::NoiseInjection { variance } => SignalState::Noise { dist: normal(*variance), rng },
                AttackTemplate::Replay { record_window, .. } => {
                    let capacity = ((record_window / ts).round() as usize).max(1);
                    SignalState::Replay {
                        capacity,
                        buffer: VecDeque::with_capacity(capacity),
                        frozen: None,
                        cursor: 0,
                    }
                }
                AttackTemplate::DestabFilter {
                    numerator,
                    denominator,
                    mu_variance,
                } => {
                    let f = RationalFilter {
                        numerator: numerator.clone(),
                        denominator: denominator.clone(),
                    };
                    SignalState::Filter {
                        state: FilterState::new(&f),
                        dist: normal(*mu_variance),
                        rng,
                    }
                }
            }
        };
        let signals = [
            mask[0].then(|| make(0)),
            mask[1].then(|| make(1)),
        ];
        if let AttackTemplate::Replay { replay_start: r, .. } = spec.template {
            replay_start = r;
        }
        Ok(Self {
            spec,
            ts,
            signals,
            replay_start,
        })
    }

    pub fn spec(&self) -> &AttackSpec {
        &self.spec
    }

    pub fn target_dgu(&self) -> usize {
        self.spec.target_dgu
    }

    pub fn sample_period(&self) -> f64 {
        self.ts
    }

    /// Maps the actual `(omega, V)` sample at time `t` to the reported one.
    pub fn apply(&mut self, t: f64, actual: [f64; 2]) -> [f64; 2] {
        let active = self.spec.is_active(t);
        let replaying = active && t >= self.replay_start - 1e-9;
        let mut out = actual;
        for (i, slot) in self.signals.iter_mut().enumerate() {
            let Some(state) = slot else { continue };
            match state {
                SignalState::Passthrough => {}
                SignalState::Noise { dist, rng } => {
                    if active {
                        if let Some(d) = dist {
                            out[i] = actual[i] + d.sample(rng);
                        }
                    }
                }
                SignalState::Replay {
                    capacity,
                    buffer,
                    frozen,
                    cursor,
                } => {
                    if replaying {
                        let rec = frozen.get_or_insert_with(|| buffer.iter().copied().collect());
                        if !rec.is_empty() {
                            out[i] = rec[*cursor % rec.len()];
                            *cursor += 1;
                        }
                    } else {
                        if buffer.len() == *capacity {
                            buffer.pop_front();
                        }
                        buffer.push_back(actual[i]);
                    }
                }
                SignalState::Filter { state, dist, rng } => {
                    if active {
                        let mut y = state.step(actual[i]);
                        if let Some(d) = dist {
                            y += d.sample(rng);
                        }
                        out[i] = y;
                    }
                }
            }
        }
        out
    }
}

/// Stateless convenience for a one-off sample: builds a fresh channel, so stateful
/// templates see a single sample only.
pub fn apply_attack(spec: &AttackSpec, ts: f64, seed: u64, t: f64, actual: [f64; 2]) -> Result<[f64; 2], AttackError> {
    let mut ch = AttackChannel::new(spec.clone(), ts, seed)?;
    Ok(ch.apply(t, actual))
}
