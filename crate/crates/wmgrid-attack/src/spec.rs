use serde::{Deserialize, Serialize};

use crate::filter::RationalFilter;
use crate::AttackError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSignal {
    Frequency,
    Voltage,
    Both,
}

impl TargetSignal {
    /// Mask over `(omega, V)`.
    pub fn mask(self) -> [bool; 2] {
        match self {
            TargetSignal::Frequency => [true, false],
            TargetSignal::Voltage => [false, true],
            TargetSignal::Both => [true, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackTemplate {
    Passthrough,
    /// Reported = actual + N(0, variance).
    NoiseInjection { variance: f64 },
    /// From `replay_start`, loops the `record_window` seconds recorded just before it.
    Replay { record_window: f64, replay_start: f64 },
    /// Reported = filter(actual) + N(0, mu_variance); coefficients in ascending powers of z.
    DestabFilter {
        numerator: Vec<f64>,
        denominator: Vec<f64>,
        mu_variance: f64,
    },
}

/// Attack on one DGU's sensor stream, active on `[start_time, end_time)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    /// Zero-based DGU index.
    pub target_dgu: usize,
    pub target_signal: TargetSignal,
    pub template: AttackTemplate,
    pub start_time: f64,
    pub end_time: f64,
}

impl AttackSpec {
    pub fn validate(&self) -> Result<(), AttackError> {
        let bad = |m: &str| Err(AttackError::Invalid(m.to_string()));
        if !(self.start_time.is_finite() && self.start_time >= 0.0) {
            return bad("start_time must be finite and non-negative");
        }
        if !(self.end_time > self.start_time) {
            return bad("start_time must precede end_time");
        }
        match &self.template {
            AttackTemplate::Passthrough => {}
            AttackTemplate::NoiseInjection { variance } => {
                if !(*variance >= 0.0 && variance.is_finite()) {
                    return bad("noise variance must be non-negative");
                }
            }
            AttackTemplate::Replay {
                record_window,
                replay_start,
            } => {
                if !(*record_window > 0.0 && record_window.is_finite()) {
                    return bad("replay record_window must be positive");
                }
                if !(*replay_start >= self.start_time && *replay_start < self.end_time) {
                    return bad("replay_start must lie inside the attack interval");
                }
                if *replay_start + 1e-9 < *record_window {
                    return Err(AttackError::ReplayUnderfilled {
                        replay_start: *replay_start,
                        record_window: *record_window,
                    });
                }
            }
            AttackTemplate::DestabFilter {
                numerator,
                denominator,
                mu_variance,
            } => {
                RationalFilter::new(numerator.clone(), denominator.clone())?;
                if !(*mu_variance >= 0.0 && mu_variance.is_finite()) {
                    return bad("mu_variance must be non-negative");
                }
            }
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start_time - 1e-9 && t < self.end_time - 1e-9
    }

    /// Destabilization filter published for the four-bus case study.
    pub fn case_study_filter() -> RationalFilter {
        RationalFilter {
            numerator: vec![0.0008, 0.0012],
            denominator: vec![0.2865, -1.285, 1.0],
        }
    }
}
