use nalgebra::DVector;

use crate::indicators::{threshold_test, AlarmDecision, IndicatorWindow, Thresholds};
use crate::kalman::KalmanState;
use crate::reduced::ReducedModel;
use crate::riccati::{solve_riccati, RiccatiOptions, RiccatiSolution};
use crate::DetectError;

/// Number of consecutive alarming windows that confirm an attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlarmPolicy {
    pub consecutive: usize,
}

impl Default for AlarmPolicy {
    fn default() -> Self {
        Self { consecutive: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    /// Window length in samples.
    pub window: usize,
    pub stride: usize,
    pub thresholds: Option<Thresholds>,
    pub policy: AlarmPolicy,
    pub riccati: RiccatiOptions,
    /// `chi1` and `chi2` are reported divided by this value.
    pub indicator_unit: f64,
}

impl DetectorConfig {
    pub fn from_seconds(window_seconds: f64, ts: f64) -> Self {
        Self {
            window: (window_seconds / ts).round().max(1.0) as usize,
            stride: 1,
            thresholds: None,
            policy: AlarmPolicy::default(),
            riccati: RiccatiOptions::default(),
            indicator_unit: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecord {
    pub step: usize,
    pub time: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub decision: AlarmDecision,
    pub confirmed: bool,
}

/// Detector for one DGU: Kalman filter, indicator window and alarm logic.
#[derive(Debug, Clone)]
pub struct Detector {
    pub model: ReducedModel,
    pub riccati: RiccatiSolution,
    pub kalman: KalmanState,
    window: IndicatorWindow,
    thresholds: Option<Thresholds>,
    policy: AlarmPolicy,
    unit: f64,
    ts: f64,
    prev_filtered: Option<DVector<f64>>,
    prev_command: DVector<f64>,
    prev_load: DVector<f64>,
    prev_watermark: [f64; 2],
    run_length: usize,
    first_confirmed: Option<f64>,
}

impl Detector {
    pub fn new(model: ReducedModel, cfg: &DetectorConfig, ts: f64) -> Result<Self, DetectError> {
        let riccati = solve_riccati(&model.a, &model.c, &model.r, &model.v, &cfg.riccati)?;
        Self::with_solution(model, riccati, cfg, ts)
    }

    pub fn with_solution(
        model: ReducedModel,
        riccati: RiccatiSolution,
        cfg: &DetectorConfig,
        ts: f64,
    ) -> Result<Self, DetectError> {
        if cfg.policy.consecutive == 0 {
            return Err(DetectError::Config("alarm policy needs at least one window".into()));
        }
        if !(cfg.indicator_unit > 0.0 && cfg.indicator_unit.is_finite()) {
            return Err(DetectError::Config("indicator unit must be positive".into()));
        }
        let gwg = &riccati.g * &riccati.w * riccati.g.transpose();
        let window = IndicatorWindow::new(cfg.window, cfg.stride, gwg)?;
        let nl = model.b_load.ncols();
        Ok(Self {
            kalman: KalmanState::new(&riccati),
            riccati,
            model,
            window,
            thresholds: cfg.thresholds,
            policy: cfg.policy,
            unit: cfg.indicator_unit,
            ts,
            prev_filtered: None,
            prev_command: DVector::zeros(2),
            prev_load: DVector::zeros(nl),
            prev_watermark: [0.0; 2],
            run_length: 0,
            first_confirmed: None,
        })
    }

    pub fn thresholds(&self) -> Option<Thresholds> {
        self.thresholds
    }

    pub fn set_thresholds(&mut self, th: Option<Thresholds>) {
        self.thresholds = th;
    }

    pub fn first_confirmed(&self) -> Option<f64> {
        self.first_confirmed
    }

    pub fn indicator_unit(&self) -> f64 {
        self.unit
    }

    pub fn window(&self) -> &IndicatorWindow {
        &self.window
    }

    /// Consumes sample `k`: the reported deviation `z`, the command applied at `k`
    /// (watermark included), the watermark itself and the load deviation.
    pub fn step(
        &mut self,
        k: usize,
        z: [f64; 2],
        command: [f64; 2],
        watermark: [f64; 2],
        load: &DVector<f64>,
    ) -> Option<WindowRecord> {
        let u = DVector::from_row_slice(&command);
        let zv = DVector::from_row_slice(&z);
        self.kalman.step(&self.model, &u, load, &zv);
        let mut record = None;
        if let Some(prev) = &self.prev_filtered {
            let mut d = &self.kalman.filtered - &self.model.a * prev - &self.model.b_ref * &self.prev_command;
            if self.prev_load.len() > 0 {
                d -= &self.model.b_load * &self.prev_load;
            }
            if let Some(ind) = self.window.push(d, self.prev_watermark) {
                let (chi1, chi2) = (ind.chi1 / self.unit, ind.chi2 / self.unit);
                let decision = self
                    .thresholds
                    .map(|th| threshold_test(chi1, chi2, &th))
                    .unwrap_or_default();
                if decision.alarm() {
                    self.run_length += 1;
                } else {
                    self.run_length = 0;
                }
                let confirmed = self.run_length >= self.policy.consecutive;
                let time = k as f64 * self.ts;
                if confirmed && self.first_confirmed.is_none() {
                    self.first_confirmed = Some(time);
                }
                record = Some(WindowRecord {
                    step: k,
                    time,
                    chi1,
                    chi2,
                    decision,
                    confirmed,
                });
            }
        }
        self.prev_filtered = Some(self.kalman.filtered.clone());
        self.prev_command = u;
        self.prev_load = load.clone();
        self.prev_watermark = watermark;
        record
    }
}
