use wmgrid_model::DguModel;

use crate::DroopError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroopGains {
    pub alpha_p: f64,
    pub beta_p: f64,
    pub alpha_q: f64,
    pub beta_q: f64,
}

impl DroopGains {
    pub fn from_dgu(d: &DguModel) -> Self {
        Self {
            alpha_p: d.alpha_p,
            beta_p: d.beta_p,
            alpha_q: d.alpha_q,
            beta_q: d.beta_q,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.alpha_p, self.beta_p, self.alpha_q, self.beta_q]
            .iter()
            .all(|g| g.is_finite())
    }
}

/// Discrete droop law on deviations from the setpoints:
/// `dP[k] = alpha_p dw[k] + beta_p Ts sum_{j<=k} dw[j]`, and the voltage/reactive analogue.
/// Accumulators are unbounded and the output is unsaturated.
#[derive(Debug, Clone, PartialEq)]
pub struct DroopState {
    pub dgu: usize,
    pub gains: DroopGains,
    pub ts: f64,
    pub omega_ref: f64,
    pub v_ref: f64,
    sum_omega: f64,
    sum_v: f64,
}

impl DroopState {
    pub fn new(dgu: usize, gains: DroopGains, ts: f64) -> Result<Self, DroopError> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(DroopError::Config(format!("sample period must be positive, got {ts}")));
        }
        if !gains.is_finite() {
            return Err(DroopError::Config("droop gains must be finite".into()));
        }
        Ok(Self {
            dgu,
            gains,
            ts,
            omega_ref: 0.0,
            v_ref: 0.0,
            sum_omega: 0.0,
            sum_v: 0.0,
        })
    }

    pub fn with_setpoints(mut self, omega_ref: f64, v_ref: f64) -> Self {
        self.omega_ref = omega_ref;
        self.v_ref = v_ref;
        self
    }

    /// Advances one sample and returns `(dP_ref, dQ_ref)`.
    pub fn step(&mut self, dw: f64, dv: f64) -> (f64, f64) {
        self.sum_omega += dw;
        self.sum_v += dv;
        let g = &self.gains;
        (
            g.alpha_p * dw + g.beta_p * self.ts * self.sum_omega,
            g.alpha_q * dv + g.beta_q * self.ts * self.sum_v,
        )
    }

    /// Droop law applied to absolute measurements.
    pub fn step_absolute(&mut self, omega: f64, v: f64) -> (f64, f64) {
        self.step(omega - self.omega_ref, v - self.v_ref)
    }

    pub fn accumulators(&self) -> (f64, f64) {
        (self.sum_omega, self.sum_v)
    }

    pub fn reset(&mut self) {
        self.sum_omega = 0.0;
        self.sum_v = 0.0;
    }
}
