use nalgebra::DVector;
use num_complex::Complex64;

use crate::dae::{Microgrid, ALGEBRAIC_PER_DGU, STATES_PER_DGU};
use crate::error::{ModelError, Result};
use crate::powerflow::{solve_power_flow, BusKind, PowerFlowCase, PowerFlowOptions};

/// Operating-point targets: DGU terminal voltage and how the total real load is shared.
#[derive(Debug, Clone)]
pub struct Setpoints {
    pub dgu_voltage: f64,
    /// Relative real-power share per DGU; empty means equal sharing.
    pub sharing: Vec<f64>,
}

impl Default for Setpoints {
    fn default() -> Self {
        Self {
            dgu_voltage: 1.0,
            sharing: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub bus_voltages: Vec<f64>,
    pub bus_angles: Vec<f64>,
    pub x0: DVector<f64>,
    pub y0: DVector<f64>,
    pub u0: DVector<f64>,
    pub power_flow_residual: f64,
    pub state_residual: f64,
}

impl Equilibrium {
    /// Per-DGU outputs `(omega_i, V_i)` at rest.
    pub fn output(&self, model: &Microgrid) -> DVector<f64> {
        model.output(&self.y0)
    }
}

pub fn find_equilibrium(model: &Microgrid, sp: &Setpoints) -> Result<Equilibrium> {
    let nb = model.n_bus();
    let n = model.n_dgu();
    if n == 0 {
        return Err(ModelError::Config("model has no DGUs".into()));
    }
    let share: Vec<f64> = if sp.sharing.is_empty() {
        vec![1.0 / n as f64; n]
    } else if sp.sharing.len() == n && sp.sharing.iter().sum::<f64>() > 0.0 {
        let s: f64 = sp.sharing.iter().sum();
        sp.sharing.iter().map(|w| w / s).collect()
    } else {
        return Err(ModelError::Config("sharing weights must match the DGU count".into()));
    };

    let mut kinds = vec![BusKind::Pq; nb];
    let mut voltage = vec![1.0; nb];
    let mut participation = vec![0.0; nb];
    for (k, d) in model.dgus.iter().enumerate() {
        kinds[d.bus] = BusKind::Pv;
        voltage[d.bus] = sp.dgu_voltage;
        participation[d.bus] = share[k];
    }
    let total_p: f64 = model.loads.iter().map(|l| l.p).sum();

    let mut history = Vec::new();
    let mut mags = voltage.clone();
    let opts = PowerFlowOptions::default();
    for _ in 0..50 {
        let mut injection = vec![Complex64::new(0.0, 0.0); nb];
        for (k, d) in model.dgus.iter().enumerate() {
            injection[d.bus].re += total_p * share[k];
        }
        for l in &model.loads {
            let scale = mags[l.bus].powf(model.load_voltage_exponent);
            injection[l.bus] -= Complex64::new(l.p, l.q) * scale;
        }
        let case = PowerFlowCase {
            kinds: kinds.clone(),
            injection,
            voltage: voltage.clone(),
            participation: participation.clone(),
        };
        let sol = solve_power_flow(&model.network, &case, &opts)?;
        let change = sol
            .magnitude
            .iter()
            .zip(&mags)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        history.push(change);
        mags = sol.magnitude.clone();
        if change <= 1e-13 {
            return build(model, &sol.magnitude, &sol.angle, &share, total_p, sol.shared_mismatch, sol.residual);
        }
    }
    Err(ModelError::NoEquilibrium { history })
}

fn build(
    model: &Microgrid,
    mag: &[f64],
    ang: &[f64],
    share: &[f64],
    total_p: f64,
    lambda: f64,
    pf_residual: f64,
) -> Result<Equilibrium> {
    let nb = model.n_bus();
    let n = model.n_dgu();
    let r = model.network.reference_bus;
    let mut x0 = DVector::zeros(model.n_state());
    let mut y0 = DVector::zeros(model.n_algebraic());
    let mut u0 = DVector::zeros(model.n_input());
    for b in 0..nb {
        y0[b] = mag[b];
        y0[nb + b] = ang[b];
    }
    // Injected power seen at each DGU bus, net of the co-located load.
    let s_net = crate::powerflow::network_power(model.admittance(), mag, ang);
    for (k, d) in model.dgus.iter().enumerate() {
        let b = d.bus;
        let load: Complex64 = model
            .loads
            .iter()
            .filter(|l| l.bus == b)
            .map(|l| Complex64::new(l.p, l.q) * mag[b].powf(model.load_voltage_exponent))
            .sum();
        let s = s_net[b] + load;
        let p = total_p * share[k] + share[k] * lambda;
        let q = s.im;
        let e = Complex64::from_polar(mag[b], ang[b]);
        let cur = (Complex64::new(p, q) / e).conj();
        let conv = e + cur * d.r_in + Complex64::new(0.0, model.omega_n * d.l_in) * cur;
        let m = conv / d.v_dc;
        let xs = STATES_PER_DGU * k;
        x0[xs] = model.omega_n;
        x0[xs + 1] = mag[b];
        x0[xs + 2] = ang[b] - ang[r];
        x0[xs + 3] = m.re / d.k_i1;
        x0[xs + 4] = m.im / d.k_i2;
        x0[xs + 5] = cur.re;
        x0[xs + 6] = cur.im;
        let a = 2 * nb + ALGEBRAIC_PER_DGU * k;
        y0[a] = model.omega_n;
        y0[a + 1] = cur.re;
        y0[a + 2] = cur.im;
        y0[a + 3] = m.re;
        y0[a + 4] = m.im;
        u0[2 * k] = p;
        u0[2 * k + 1] = q;
    }
    let m0 = 2 * n;
    for (l, ld) in model.loads.iter().enumerate() {
        u0[m0 + 2 * l] = ld.p;
        u0[m0 + 2 * l + 1] = ld.q;
    }
    let state_residual = model.f(&x0, &y0, &u0).amax();
    let alg_residual = model.g(&x0, &y0, &u0).amax();
    if state_residual > 1e-8 || alg_residual > 1e-8 {
        return Err(ModelError::NoEquilibrium {
            history: vec![state_residual, alg_residual],
        });
    }
    Ok(Equilibrium {
        bus_voltages: mag.to_vec(),
        bus_angles: ang.to_vec(),
        x0,
        y0,
        u0,
        power_flow_residual: pf_residual.max(alg_residual),
        state_residual,
    })
}
