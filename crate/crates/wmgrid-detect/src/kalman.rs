use nalgebra::{DMatrix, DVector};

use crate::reduced::ReducedModel;
use crate::riccati::RiccatiSolution;

/// Steady-state Kalman filter on the reduced model, fed with reported measurements.
#[derive(Debug, Clone)]
pub struct KalmanState {
    pub g: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// `x[k|k-1]`.
    pub predicted: DVector<f64>,
    /// `x[k|k]`.
    pub filtered: DVector<f64>,
    /// Last innovation `z[k] - C x[k|k-1] - D_L u_L[k]`.
    pub innovation: DVector<f64>,
}

impl KalmanState {
    pub fn new(sol: &RiccatiSolution) -> Self {
        let n = sol.p.nrows();
        let p = sol.w.nrows();
        Self {
            g: sol.g.clone(),
            p: sol.p.clone(),
            w: sol.w.clone(),
            predicted: DVector::zeros(n),
            filtered: DVector::zeros(n),
            innovation: DVector::zeros(p),
        }
    }

    /// Measurement update with `z[k]`, then time update with the command applied at `k`.
    ///
    /// Equivalent to
    /// `x[k+1|k] = A (I - G C) x[k|k-1] + B_ref u_ref + B_L u_L + A G z` and
    /// `x[k|k] = (I - G C) x[k|k-1] + G z`, with `z` corrected for load feedthrough.
    pub fn step(&mut self, rm: &ReducedModel, u_ref: &DVector<f64>, u_load: &DVector<f64>, z: &DVector<f64>) {
        let mut innov = z - &rm.c * &self.predicted;
        if u_load.len() > 0 {
            innov -= &rm.d_load * u_load;
        }
        self.filtered = &self.predicted + &self.g * &innov;
        self.innovation = innov;
        let mut next = &rm.a * &self.filtered + &rm.b_ref * u_ref;
        if u_load.len() > 0 {
            next += &rm.b_load * u_load;
        }
        self.predicted = next;
    }

    pub fn reset(&mut self) {
        self.predicted.fill(0.0);
        self.filtered.fill(0.0);
        self.innovation.fill(0.0);
    }
}
