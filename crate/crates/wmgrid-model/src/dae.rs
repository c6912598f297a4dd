//! Differential-algebraic microgrid model.
//!
//! Dynamic state, 7 per DGU in DGU-major order:
//! `[omega_m, v_m, theta_m, gamma_d, gamma_q, i_d, i_q]`.
//!
//! Algebraic variables: every bus magnitude, then every bus angle, then per DGU
//! `[omega, i_dref, i_qref, m_d, m_q]`.
//!
//! Inputs: per DGU `[P_ref, Q_ref]`, then per load `[P_L, Q_L]`.
//!
//! Currents and voltages live in a common frame rotating at the nominal frequency;
//! measured angles and frequencies are taken relative to the reference bus.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::network::NetworkModel;
use crate::powerflow::{network_power, network_power_jacobian};

pub const STATES_PER_DGU: usize = 7;
pub const ALGEBRAIC_PER_DGU: usize = 5;

pub mod state {
    pub const OMEGA_M: usize = 0;
    pub const V_M: usize = 1;
    pub const THETA_M: usize = 2;
    pub const GAMMA_D: usize = 3;
    pub const GAMMA_Q: usize = 4;
    pub const I_D: usize = 5;
    pub const I_Q: usize = 6;
}

/// Inverter-interfaced unit, per-unit parameters (droop gains act on rad/s and per-unit voltage).
#[derive(Debug, Clone, PartialEq)]
pub struct DguModel {
    pub bus: usize,
    pub t_omega: f64,
    pub t_v: f64,
    pub t_theta: f64,
    pub alpha_p: f64,
    pub beta_p: f64,
    pub alpha_q: f64,
    pub beta_q: f64,
    pub k_p1: f64,
    pub k_i1: f64,
    pub k_p2: f64,
    pub k_i2: f64,
    pub v_dc: f64,
    pub r_in: f64,
    pub l_in: f64,
    pub steady_p: f64,
    pub steady_q: f64,
}

impl DguModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_omega", self.t_omega),
            ("t_v", self.t_v),
            ("t_theta", self.t_theta),
            ("l_in", self.l_in),
            ("v_dc", self.v_dc),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Config(format!(
                    "DGU on bus {}: {name} must be positive",
                    self.bus + 1
                )));
            }
        }
        Ok(())
    }
}

/// Load with rated powers in per-unit; consumption scales as `|V|^voltage_exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadModel {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone)]
pub struct Microgrid {
    pub network: NetworkModel,
    pub dgus: Vec<DguModel>,
    pub loads: Vec<LoadModel>,
    pub load_voltage_exponent: f64,
    pub omega_n: f64,
    admittance: DMatrix<Complex64>,
}

/// Partial derivatives of `f` and `g` at a point.
#[derive(Debug, Clone)]
pub struct DaeJacobians {
    pub fx: DMatrix<f64>,
    pub fy: DMatrix<f64>,
    pub fu: DMatrix<f64>,
    pub gx: DMatrix<f64>,
    pub gy: DMatrix<f64>,
    pub gu: DMatrix<f64>,
}

impl Microgrid {
    /// Assembles the model; fails on duplicate DGUs or buses outside the network.
    pub fn assemble(
        network: NetworkModel,
        dgus: Vec<DguModel>,
        loads: Vec<LoadModel>,
        load_voltage_exponent: f64,
    ) -> Result<Self> {
        let mut network = network;
        network.dgu_buses = dgus.iter().map(|d| d.bus).collect();
        network.load_buses = loads.iter().map(|l| l.bus).collect();
        network.validate()?;
        for d in &dgus {
            d.validate()?;
        }
        if !load_voltage_exponent.is_finite() {
            return Err(ModelError::Config("load voltage exponent must be finite".into()));
        }
        let admittance = network.admittance();
        Ok(Self {
            omega_n: network.nominal_frequency,
            network,
            dgus,
            loads,
            load_voltage_exponent,
            admittance,
        })
    }

    pub fn admittance(&self) -> &DMatrix<Complex64> {
        &self.admittance
    }

    pub fn n_dgu(&self) -> usize {
        self.dgus.len()
    }

    pub fn n_bus(&self) -> usize {
        self.network.bus_count
    }

    pub fn n_state(&self) -> usize {
        STATES_PER_DGU * self.dgus.len()
    }

    pub fn n_algebraic(&self) -> usize {
        2 * self.n_bus() + ALGEBRAIC_PER_DGU * self.dgus.len()
    }

    pub fn n_input_ref(&self) -> usize {
        2 * self.dgus.len()
    }

    pub fn n_input_load(&self) -> usize {
        2 * self.loads.len()
    }

    pub fn n_input(&self) -> usize {
        self.n_input_ref() + self.n_input_load()
    }

    pub fn n_output(&self) -> usize {
        2 * self.dgus.len()
    }

    fn alg_dgu(&self, k: usize) -> usize {
        2 * self.n_bus() + ALGEBRAIC_PER_DGU * k
    }

    /// Indices of `(omega_i, V_i)` in the algebraic vector, stacked per DGU.
    pub fn output_indices(&self) -> Vec<usize> {
        self.dgus
            .iter()
            .enumerate()
            .flat_map(|(k, d)| [self.alg_dgu(k), d.bus])
            .collect()
    }

    pub fn output(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.n_output(), self.output_indices().into_iter().map(|i| y[i]))
    }

    fn split_alg<'a>(&self, y: &'a DVector<f64>) -> (&'a [f64], &'a [f64]) {
        let nb = self.n_bus();
        let s = y.as_slice();
        (&s[..nb], &s[nb..2 * nb])
    }

    /// Differential right-hand side.
    pub fn f(&self, x: &DVector<f64>, y: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        let (mag, ang) = self.split_alg(y);
        let r = self.network.reference_bus;
        let mut out = DVector::zeros(self.n_state());
        for (k, d) in self.dgus.iter().enumerate() {
            let xs = STATES_PER_DGU * k;
            let a = self.alg_dgu(k);
            let b = d.bus;
            let (omega, idr, iqr, md, mq) = (y[a], y[a + 1], y[a + 2], y[a + 3], y[a + 4]);
            let (wm, vm, thm) = (x[xs], x[xs + 1], x[xs + 2]);
            let (id, iq) = (x[xs + 5], x[xs + 6]);
            out[xs] = (omega - wm) / d.t_omega;
            out[xs + 1] = (mag[b] - vm) / d.t_v;
            out[xs + 2] = (ang[b] - ang[r] - thm) / d.t_theta;
            out[xs + 3] = idr - id;
            out[xs + 4] = iqr - iq;
            out[xs + 5] = (md * d.v_dc - mag[b] * ang[b].cos() - d.r_in * id + omega * d.l_in * iq) / d.l_in;
            out[xs + 6] = (mq * d.v_dc - mag[b] * ang[b].sin() - d.r_in * iq - omega * d.l_in * id) / d.l_in;
        }
        out
    }

    /// Algebraic residual: bus power balance (real rows, then imaginary rows), then per-DGU relations.
    pub fn g(&self, x: &DVector<f64>, y: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let nb = self.n_bus();
        let (mag, ang) = self.split_alg(y);
        let r = self.network.reference_bus;
        let mut out = DVector::zeros(self.n_algebraic());
        let s_net = network_power(&self.admittance, mag, ang);
        let mut mis: Vec<Complex64> = s_net.iter().map(|s| -*s).collect();
        for (k, d) in self.dgus.iter().enumerate() {
            let xs = STATES_PER_DGU * k;
            let cur = Complex64::new(x[xs + 5], x[xs + 6]);
            mis[d.bus] += Complex64::from_polar(mag[d.bus], ang[d.bus]) * cur.conj();
        }
        let m0 = self.n_input_ref();
        for (l, ld) in self.loads.iter().enumerate() {
            let scale = mag[ld.bus].powf(self.load_voltage_exponent);
            mis[ld.bus] -= Complex64::new(u[m0 + 2 * l], u[m0 + 2 * l + 1]) * scale;
        }
        for b in 0..nb {
            out[b] = mis[b].re;
            out[nb + b] = mis[b].im;
        }
        for (k, d) in self.dgus.iter().enumerate() {
            let xs = STATES_PER_DGU * k;
            let a = self.alg_dgu(k);
            let (p, q) = (u[2 * k], u[2 * k + 1]);
            let (vm, thm) = (x[xs + 1], x[xs + 2]);
            let (gd, gq, id, iq) = (x[xs + 3], x[xs + 4], x[xs + 5], x[xs + 6]);
            let (vdm, vqm) = (vm * thm.cos(), vm * thm.sin());
            out[a] = y[a] - self.omega_n - (ang[d.bus] - ang[r] - thm) / d.t_theta;
            out[a + 1] = y[a + 1] - (p * vdm + q * vqm) / vm;
            out[a + 2] = y[a + 2] - (p * vqm - q * vdm) / vm;
            out[a + 3] = y[a + 3] - d.k_p1 * (y[a + 1] - id) - d.k_i1 * gd;
            out[a + 4] = y[a + 4] - d.k_p2 * (y[a + 2] - iq) - d.k_i2 * gq;
        }
        out
    }

    /// Analytic partial derivatives of `f` and `g`.
    pub fn jacobians(&self, x: &DVector<f64>, y: &DVector<f64>, u: &DVector<f64>) -> DaeJacobians {
        let nb = self.n_bus();
        let (nx, ny, nu) = (self.n_state(), self.n_algebraic(), self.n_input());
        let (mag, ang) = self.split_alg(y);
        let r = self.network.reference_bus;
        let mut fx = DMatrix::zeros(nx, nx);
        let mut fy = DMatrix::zeros(nx, ny);
        let fu = DMatrix::zeros(nx, nu);
        let mut gx = DMatrix::zeros(ny, nx);
        let mut gy = DMatrix::zeros(ny, ny);
        let mut gu = DMatrix::zeros(ny, nu);

        for (k, d) in self.dgus.iter().enumerate() {
            let xs = STATES_PER_DGU * k;
            let a = self.alg_dgu(k);
            let b = d.bus;
            let (id, iq) = (x[xs + 5], x[xs + 6]);
            let omega = y[a];
            fx[(xs, xs)] = -1.0 / d.t_omega;
            fy[(xs, a)] = 1.0 / d.t_omega;
            fx[(xs + 1, xs + 1)] = -1.0 / d.t_v;
            fy[(xs + 1, b)] = 1.0 / d.t_v;
            fx[(xs + 2, xs + 2)] = -1.0 / d.t_theta;
            fy[(xs + 2, nb + b)] += 1.0 / d.t_theta;
            fy[(xs + 2, nb + r)] -= 1.0 / d.t_theta;
            fy[(xs + 3, a + 1)] = 1.0;
            fx[(xs + 3, xs + 5)] = -1.0;
            fy[(xs + 4, a + 2)] = 1.0;
            fx[(xs + 4, xs + 6)] = -1.0;
            // i_d
            fx[(xs + 5, xs + 5)] = -d.r_in / d.l_in;
            fx[(xs + 5, xs + 6)] = omega;
            fy[(xs + 5, a)] = iq;
            fy[(xs + 5, a + 3)] = d.v_dc / d.l_in;
            fy[(xs + 5, b)] = -ang[b].cos() / d.l_in;
            fy[(xs + 5, nb + b)] = mag[b] * ang[b].sin() / d.l_in;
            // i_q
            fx[(xs + 6, xs + 6)] = -d.r_in / d.l_in;
            fx[(xs + 6, xs + 5)] = -omega;
            fy[(xs + 6, a)] = -id;
            fy[(xs + 6, a + 4)] = d.v_dc / d.l_in;
            fy[(xs + 6, b)] = -ang[b].sin() / d.l_in;
            fy[(xs + 6, nb + b)] = -mag[b] * ang[b].cos() / d.l_in;
        }

        // Network rows: mismatch = injection - load - network power.
        let (ds_dth, ds_dv) = network_power_jacobian(&self.admittance, mag, ang);
        for bi in 0..nb {
            for kj in 0..nb {
                gy[(bi, kj)] = -ds_dv[(bi, kj)].re;
                gy[(nb + bi, kj)] = -ds_dv[(bi, kj)].im;
                gy[(bi, nb + kj)] = -ds_dth[(bi, kj)].re;
                gy[(nb + bi, nb + kj)] = -ds_dth[(bi, kj)].im;
            }
        }
        let j = Complex64::new(0.0, 1.0);
        for (k, d) in self.dgus.iter().enumerate() {
            let xs = STATES_PER_DGU * k;
            let b = d.bus;
            let e = Complex64::from_polar(mag[b], ang[b]);
            let cur = Complex64::new(x[xs + 5], x[xs + 6]);
            let inj = e * cur.conj();
            let d_id = e;
            let d_iq = -j * e;
            gx[(b, xs + 5)] += d_id.re;
            gx[(nb + b, xs + 5)] += d_id.im;
            gx[(b, xs + 6)] += d_iq.re;
            gx[(nb + b, xs + 6)] += d_iq.im;
            let d_v = Complex64::from_polar(1.0, ang[b]) * cur.conj();
            let d_th = j * inj;
            gy[(b, b)] += d_v.re;
            gy[(nb + b, b)] += d_v.im;
            gy[(b, nb + b)] += d_th.re;
            gy[(nb + b, nb + b)] += d_th.im;
        }
        let m0 = self.n_input_ref();
        let kexp = self.load_voltage_exponent;
        for (l, ld) in self.loads.iter().enumerate() {
            let b = ld.bus;
            let s = Complex64::new(u[m0 + 2 * l], u[m0 + 2 * l + 1]);
            let scale = mag[b].powf(kexp);
            let dscale = if kexp == 0.0 { 0.0 } else { kexp * mag[b].powf(kexp - 1.0) };
            gy[(b, b)] -= (s * dscale).re;
            gy[(nb + b, b)] -= (s * dscale).im;
            gu[(b, m0 + 2 * l)] -= scale;
            gu[(nb + b, m0 + 2 * l + 1)] -= scale;
        }

        for (k, d) in self.dgus.iter().enumerate() {
            let xs = STATES_PER_DGU * k;
            let a = self.alg_dgu(k);
            let b = d.bus;
            let (p, q) = (u[2 * k], u[2 * k + 1]);
            let thm = x[xs + 2];
            let (c, s) = (thm.cos(), thm.sin());
            gy[(a, a)] = 1.0;
            gy[(a, nb + b)] += -1.0 / d.t_theta;
            gy[(a, nb + r)] += 1.0 / d.t_theta;
            gx[(a, xs + 2)] = 1.0 / d.t_theta;
            // i_dref = P cos + Q sin (the measured magnitude cancels)
            gy[(a + 1, a + 1)] = 1.0;
            gx[(a + 1, xs + 2)] = -(-p * s + q * c);
            gu[(a + 1, 2 * k)] = -c;
            gu[(a + 1, 2 * k + 1)] = -s;
            gy[(a + 2, a + 2)] = 1.0;
            gx[(a + 2, xs + 2)] = -(p * c + q * s);
            gu[(a + 2, 2 * k)] = -s;
            gu[(a + 2, 2 * k + 1)] = c;
            gy[(a + 3, a + 3)] = 1.0;
            gy[(a + 3, a + 1)] = -d.k_p1;
            gx[(a + 3, xs + 5)] = d.k_p1;
            gx[(a + 3, xs + 3)] = -d.k_i1;
            gy[(a + 4, a + 4)] = 1.0;
            gy[(a + 4, a + 2)] = -d.k_p2;
            gx[(a + 4, xs + 6)] = d.k_p2;
            gx[(a + 4, xs + 4)] = -d.k_i2;
        }
        DaeJacobians { fx, fy, fu, gx, gy, gu }
    }

    /// Solves `g(x, y, u) = 0` for `y` by Newton iteration from `guess`.
    pub fn solve_algebraic(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        guess: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let mut y = guess.clone();
        let mut res = self.g(x, &y, u);
        for iteration in 0..60 {
            if res.amax() <= 1e-13 {
                return Ok(y);
            }
            let jac = self.jacobians(x, &y, u);
            let step = jac
                .gy
                .lu()
                .solve(&res)
                .ok_or(ModelError::SingularJacobian { iteration: iteration + 1 })?;
            y -= step;
            let next = self.g(x, &y, u);
            if next.amax() >= res.amax() && next.amax() <= 1e-12 {
                return Ok(y);
            }
            res = next;
        }
        if res.amax() <= 1e-10 {
            return Ok(y);
        }
        Err(ModelError::Divergence {
            iterations: 60,
            residual: res.amax(),
        })
    }
}
