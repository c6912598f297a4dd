use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::network::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    /// Voltage magnitude fixed, real power free (absorbs the mismatch).
    Slack,
    /// Real power and voltage magnitude fixed.
    Pv,
    /// Real and reactive power fixed.
    Pq,
}

/// Power-flow problem. Injections are generation minus consumption, per-unit.
///
/// When `participation` has a nonzero entry the real-power mismatch is shared:
/// bus `b` injects `injection[b].re + participation[b] * lambda` with `lambda` solved for,
/// and no bus may be of kind [`BusKind::Slack`].
#[derive(Debug, Clone)]
pub struct PowerFlowCase {
    pub kinds: Vec<BusKind>,
    pub injection: Vec<Complex64>,
    pub voltage: Vec<f64>,
    pub participation: Vec<f64>,
}

impl PowerFlowCase {
    /// Reference bus as slack at 1 pu, all others PQ with the given injections.
    pub fn with_slack(net: &NetworkModel, injection: Vec<Complex64>) -> Self {
        let n = net.bus_count;
        let mut kinds = vec![BusKind::Pq; n];
        kinds[net.reference_bus] = BusKind::Slack;
        Self {
            kinds,
            injection,
            voltage: vec![1.0; n],
            participation: vec![0.0; n],
        }
    }

    fn distributed(&self) -> bool {
        self.participation.iter().any(|p| *p != 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerFlowOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerFlowSolution {
    pub magnitude: Vec<f64>,
    pub angle: Vec<f64>,
    /// Net complex injection at every bus, computed from the solved voltages.
    pub injection: Vec<Complex64>,
    /// Distributed-slack multiplier (zero without distribution).
    pub shared_mismatch: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Complex power `S = E * conj(Y E)` drawn by the network at every bus.
pub fn network_power(y: &DMatrix<Complex64>, mag: &[f64], ang: &[f64]) -> Vec<Complex64> {
    let e: Vec<Complex64> = mag
        .iter()
        .zip(ang)
        .map(|(v, t)| Complex64::from_polar(*v, *t))
        .collect();
    (0..e.len())
        .map(|b| {
            let i: Complex64 = (0..e.len()).map(|j| y[(b, j)] * e[j]).sum();
            e[b] * i.conj()
        })
        .collect()
}

/// Partial derivatives of the network power with respect to angles and magnitudes.
/// Returns `(dS/dtheta, dS/dV)`, entry `(b, j)` is the derivative of `S_b`.
pub fn network_power_jacobian(
    y: &DMatrix<Complex64>,
    mag: &[f64],
    ang: &[f64],
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = mag.len();
    let j = Complex64::new(0.0, 1.0);
    let e: Vec<Complex64> = mag
        .iter()
        .zip(ang)
        .map(|(v, t)| Complex64::from_polar(*v, *t))
        .collect();
    let cur: Vec<Complex64> = (0..n).map(|b| (0..n).map(|k| y[(b, k)] * e[k]).sum()).collect();
    let mut ds_dth = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut ds_dv = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for b in 0..n {
        for k in 0..n {
            let yk = y[(b, k)] * e[k];
            ds_dth[(b, k)] = -j * e[b] * yk.conj();
            ds_dv[(b, k)] = e[b] * (y[(b, k)] * Complex64::from_polar(1.0, ang[k])).conj();
        }
        ds_dth[(b, b)] += j * e[b] * cur[b].conj();
        ds_dv[(b, b)] += Complex64::from_polar(1.0, ang[b]) * cur[b].conj();
    }
    (ds_dth, ds_dv)
}

/// Newton-Raphson power flow in polar coordinates, flat start.
pub fn solve_power_flow(
    net: &NetworkModel,
    case: &PowerFlowCase,
    opts: &PowerFlowOptions,
) -> Result<PowerFlowSolution> {
    let nb = net.bus_count;
    if case.kinds.len() != nb
        || case.injection.len() != nb
        || case.voltage.len() != nb
        || case.participation.len() != nb
    {
        return Err(ModelError::Dimension(format!(
            "power-flow case sized for {} buses, network has {nb}",
            case.kinds.len()
        )));
    }
    let distributed = case.distributed();
    let reference = net.reference_bus;
    if distributed && case.kinds.contains(&BusKind::Slack) {
        return Err(ModelError::Config(
            "distributed slack cannot be combined with a slack bus".into(),
        ));
    }
    if !distributed && case.kinds.iter().filter(|k| **k == BusKind::Slack).count() != 1 {
        return Err(ModelError::Config("exactly one slack bus is required".into()));
    }

    let theta_vars: Vec<usize> = (0..nb).filter(|b| *b != reference).collect();
    let v_vars: Vec<usize> = (0..nb).filter(|b| case.kinds[*b] == BusKind::Pq).collect();
    let p_eqs: Vec<usize> = (0..nb).filter(|b| case.kinds[*b] != BusKind::Slack).collect();
    let q_eqs = v_vars.clone();
    let n_unknown = theta_vars.len() + v_vars.len() + usize::from(distributed);
    let n_eq = p_eqs.len() + q_eqs.len();
    if n_unknown != n_eq {
        return Err(ModelError::Config(format!(
            "power-flow case has {n_unknown} unknowns but {n_eq} equations"
        )));
    }

    let y = net.admittance();
    let mut mag = case.voltage.clone();
    let mut ang = vec![0.0; nb];
    let mut lambda = 0.0;

    let mismatch = |mag: &[f64], ang: &[f64], lambda: f64| -> DVector<f64> {
        let s = network_power(&y, mag, ang);
        let mut r = DVector::zeros(n_eq);
        for (row, &b) in p_eqs.iter().enumerate() {
            r[row] = case.injection[b].re + case.participation[b] * lambda - s[b].re;
        }
        for (row, &b) in q_eqs.iter().enumerate() {
            r[p_eqs.len() + row] = case.injection[b].im - s[b].im;
        }
        r
    };

    let mut r = mismatch(&mag, &ang, lambda);
    let mut residual = r.amax();
    for iter in 0..opts.max_iterations {
        if residual <= opts.tolerance {
            return Ok(finish(&y, mag, ang, lambda, iter, residual));
        }
        let (ds_dth, ds_dv) = network_power_jacobian(&y, &mag, &ang);
        let mut jac = DMatrix::zeros(n_eq, n_unknown);
        for (row, &b) in p_eqs.iter().enumerate() {
            for (col, &k) in theta_vars.iter().enumerate() {
                jac[(row, col)] = -ds_dth[(b, k)].re;
            }
            for (col, &k) in v_vars.iter().enumerate() {
                jac[(row, theta_vars.len() + col)] = -ds_dv[(b, k)].re;
            }
            if distributed {
                jac[(row, n_unknown - 1)] = case.participation[b];
            }
        }
        for (row, &b) in q_eqs.iter().enumerate() {
            let row = p_eqs.len() + row;
            for (col, &k) in theta_vars.iter().enumerate() {
                jac[(row, col)] = -ds_dth[(b, k)].im;
            }
            for (col, &k) in v_vars.iter().enumerate() {
                jac[(row, theta_vars.len() + col)] = -ds_dv[(b, k)].im;
            }
        }
        let step = jac
            .lu()
            .solve(&(-&r))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(ModelError::SingularJacobian { iteration: iter + 1 })?;
        for (col, &k) in theta_vars.iter().enumerate() {
            ang[k] += step[col];
        }
        for (col, &k) in v_vars.iter().enumerate() {
            mag[k] += step[theta_vars.len() + col];
        }
        if distributed {
            lambda += step[n_unknown - 1];
        }
        r = mismatch(&mag, &ang, lambda);
        residual = r.amax();
        if !residual.is_finite() {
            break;
        }
    }
    if residual <= opts.tolerance {
        return Ok(finish(&y, mag, ang, lambda, opts.max_iterations, residual));
    }
    Err(ModelError::Divergence {
        iterations: opts.max_iterations,
        residual,
    })
}

fn finish(
    y: &DMatrix<Complex64>,
    magnitude: Vec<f64>,
    angle: Vec<f64>,
    shared_mismatch: f64,
    iterations: usize,
    residual: f64,
) -> PowerFlowSolution {
    let injection = network_power(y, &magnitude, &angle);
    PowerFlowSolution {
        magnitude,
        angle,
        injection,
        shared_mismatch,
        iterations,
        residual,
    }
}
