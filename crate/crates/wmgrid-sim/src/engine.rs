use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use wmgrid_attack::AttackChannel;
use wmgrid_detect::{Detector, WindowRecord};
use wmgrid_droop::{DroopState, WatermarkSource};

use crate::prepare::PreparedScenario;
use crate::seeds::SeedSet;
use crate::SimError;

/// Fixed-width rows on the common time base.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stream {
    pub width: usize,
    pub data: Vec<f64>,
}

impl Stream {
    pub fn new(width: usize, rows: usize) -> Self {
        Self {
            width,
            data: Vec::with_capacity(width * rows),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width);
        self.data.extend_from_slice(row);
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.width.max(1)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    /// The divergence guard stopped the run; `step` is the last step with a finite state.
    Diverged { step: usize, time: f64, state_norm: f64 },
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        matches!(self, RunOutcome::Diverged { .. })
    }
}

/// Per-window indicator records of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorTrace {
    pub dgu: usize,
    pub windows: Vec<WindowRecord>,
    pub first_confirmed: Option<f64>,
}

/// Synchronized records of one run. Row `k` of every stream belongs to `t = k Ts`.
/// Output-sized streams hold `(omega_1, V_1, omega_2, V_2, ...)`, command streams
/// `(P_1, Q_1, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub ts: f64,
    pub seeds: SeedSet,
    pub time: Vec<f64>,
    pub actual: Stream,
    pub reported: Stream,
    /// Droop commands before the watermark.
    pub command: Stream,
    /// Commands applied to the plant.
    pub applied: Stream,
    pub watermark: Stream,
    /// Kalman innovations, two columns per detector.
    pub innovation: Stream,
    /// `|x|_inf` of the plant state deviation.
    pub state_norm: Vec<f64>,
    pub detectors: Vec<DetectorTrace>,
    pub outcome: RunOutcome,
}

impl TimeSeries {
    pub fn steps(&self) -> usize {
        self.time.len()
    }

    pub fn first_confirmed(&self) -> Option<f64> {
        self.detectors
            .iter()
            .filter_map(|d| d.first_confirmed)
            .min_by(f64::total_cmp)
    }
}

fn gaussian(rng: &mut ChaCha20Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Runs the scenario with its own seeds.
pub fn run_scenario(p: &PreparedScenario) -> Result<TimeSeries, SimError> {
    run_with_seeds(p, p.scenario.seed_set())
}

/// One closed-loop run. Per step `k`: output with sensor noise, attack channels,
/// droop law plus watermark, detectors, then the plant update with process noise.
pub fn run_with_seeds(p: &PreparedScenario, seeds: SeedSet) -> Result<TimeSeries, SimError> {
    let sc = &p.scenario;
    let n_dgu = p.n_dgu();
    let nx = p.plant.n_state();
    let ny = 2 * n_dgu;
    let nl = p.plant.b_load.ncols();
    let steps = p.steps;
    let ts = p.ts;

    let mut proc_rng = ChaCha20Rng::seed_from_u64(seeds.process);
    let mut meas_rng = ChaCha20Rng::seed_from_u64(seeds.measurement);

    let mut droop: Vec<DroopState> = p
        .gains
        .iter()
        .enumerate()
        .map(|(k, g)| DroopState::new(k, *g, ts))
        .collect::<Result<_, _>>()?;
    let channels = sc.watermark.channels();
    let mut marks: Vec<WatermarkSource> = (0..n_dgu)
        .map(|k| {
            WatermarkSource::new(sc.watermark.variance, SeedSet::sub(seeds.watermark, k))
                .map(|w| w.with_channels(channels))
        })
        .collect::<Result<_, _>>()?;
    let mut attacks: Vec<AttackChannel> = p
        .attacks
        .iter()
        .enumerate()
        .map(|(k, a)| AttackChannel::new(a.clone(), ts, SeedSet::sub(seeds.attack, k)))
        .collect::<Result<_, _>>()?;
    let mut detectors: Vec<Detector> = p
        .detectors
        .iter()
        .map(|d| {
            let mut cfg = p.detector_config.clone();
            cfg.thresholds = d.thresholds;
            Detector::with_solution(d.model.clone(), d.riccati.clone(), &cfg, ts)
        })
        .collect::<Result<_, _>>()?;
    let mut traces: Vec<DetectorTrace> = p
        .detectors
        .iter()
        .map(|d| DetectorTrace {
            dgu: d.dgu,
            windows: Vec::new(),
            first_confirmed: None,
        })
        .collect();

    let mut load_steps = sc.load_steps.clone();
    load_steps.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_load = 0;
    let mut u_load = DVector::zeros(nl);

    let mut out = TimeSeries {
        ts,
        seeds,
        time: Vec::with_capacity(steps),
        actual: Stream::new(ny, steps),
        reported: Stream::new(ny, steps),
        command: Stream::new(ny, steps),
        applied: Stream::new(ny, steps),
        watermark: Stream::new(ny, steps),
        innovation: Stream::new(2 * detectors.len(), steps),
        state_norm: Vec::with_capacity(steps),
        detectors: Vec::new(),
        outcome: RunOutcome::Completed,
    };

    let mut x = &p.process_factor * gaussian(&mut proc_rng, nx);
    let mut y = vec![0.0; ny];
    let mut z = vec![0.0; ny];
    let mut h = vec![0.0; ny];
    let mut e = vec![0.0; ny];
    let mut u = vec![0.0; ny];
    let mut innov = vec![0.0; 2 * detectors.len()];

    for k in 0..steps {
        let t = k as f64 * ts;
        while next_load < load_steps.len() && load_steps[next_load].time <= t + 1e-9 {
            let s = load_steps[next_load];
            u_load[2 * (s.load - 1)] += s.dp;
            u_load[2 * (s.load - 1) + 1] += s.dq;
            next_load += 1;
        }

        let v = &p.measurement_factor * gaussian(&mut meas_rng, ny);
        let mut yv = &p.plant.c * &x + v;
        if nl > 0 {
            yv += &p.plant.d_load * &u_load;
        }
        y.copy_from_slice(yv.as_slice());

        z.copy_from_slice(&y);
        for ch in &mut attacks {
            let i = ch.target_dgu();
            let r = ch.apply(t, [z[2 * i], z[2 * i + 1]]);
            z[2 * i] = r[0];
            z[2 * i + 1] = r[1];
        }

        for i in 0..n_dgu {
            let (dp, dq) = droop[i].step(z[2 * i], z[2 * i + 1]);
            let w = marks[i].draw();
            h[2 * i] = dp;
            h[2 * i + 1] = dq;
            e[2 * i] = w[0];
            e[2 * i + 1] = w[1];
            u[2 * i] = dp + w[0];
            u[2 * i + 1] = dq + w[1];
        }

        for (slot, det) in detectors.iter_mut().enumerate() {
            let i = det.model.dgu;
            let rec = det.step(
                k,
                [z[2 * i], z[2 * i + 1]],
                [u[2 * i], u[2 * i + 1]],
                [e[2 * i], e[2 * i + 1]],
                &u_load,
            );
            innov[2 * slot] = det.kalman.innovation[0];
            innov[2 * slot + 1] = det.kalman.innovation[1];
            if let Some(r) = rec {
                traces[slot].windows.push(r);
            }
        }

        out.time.push(t);
        out.actual.push(&y);
        out.reported.push(&z);
        out.command.push(&h);
        out.applied.push(&u);
        out.watermark.push(&e);
        out.innovation.push(&innov);
        out.state_norm.push(x.amax());

        let uv = DVector::from_column_slice(&u);
        let mut next = &p.plant.a * &x + &p.plant.b_ref * uv + &p.process_factor * gaussian(&mut proc_rng, nx);
        if nl > 0 {
            next += &p.plant.b_load * &u_load;
        }
        let norm = next.amax();
        if !norm.is_finite() || norm > sc.divergence_bound || next.iter().any(|v| !v.is_finite()) {
            out.outcome = RunOutcome::Diverged {
                step: k,
                time: t,
                state_norm: norm,
            };
            break;
        }
        x = next;
    }

    for (slot, det) in detectors.iter().enumerate() {
        traces[slot].first_confirmed = det.first_confirmed();
    }
    out.detectors = traces;
    Ok(out)
}
