use nalgebra::DMatrix;
use wmgrid_droop::{DroopGains, Interconnection};
use wmgrid_model::StateSpace;

use crate::minreal::minimal_realization;
use crate::DetectError;

pub const MINREAL_TOLERANCE: f64 = 1e-8;

/// Noise statistics of the honest loop, as seen in discrete time.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    /// Plant process-noise covariance per sample.
    pub process_cov: DMatrix<f64>,
    /// Sensor-noise covariance over all `(omega, V)` outputs.
    pub measurement_cov: DMatrix<f64>,
    /// Watermark variance on the `(P, Q)` command channels of every controller.
    pub watermark_variance: [f64; 2],
}

impl NoiseModel {
    pub fn from_plant(plant: &StateSpace, watermark_variance: [f64; 2]) -> Self {
        Self {
            process_cov: plant.process_cov.clone(),
            measurement_cov: plant.measurement_cov.clone(),
            watermark_variance,
        }
    }
}

/// Minimal model of `(dU_ref_i, dU_L) -> dY_i` with every other droop law closed.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub dgu: usize,
    pub a: DMatrix<f64>,
    pub b_ref: DMatrix<f64>,
    pub b_load: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d_load: DMatrix<f64>,
    /// Process-noise covariance in reduced coordinates.
    pub r: DMatrix<f64>,
    /// Sensor-noise covariance of this DGU's outputs.
    pub v: DMatrix<f64>,
    pub full_order: usize,
    /// Orthonormal map from reduced to interconnection coordinates.
    pub basis: DMatrix<f64>,
    /// Singular values of `C_m B_ref`.
    pub cb_singular_values: Vec<f64>,
}

impl ReducedModel {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn removed_fraction(&self) -> f64 {
        1.0 - self.order() as f64 / self.full_order as f64
    }
}

pub fn build_reduced_model(
    plant: &StateSpace,
    gains: &[DroopGains],
    ts: f64,
    open_dgu: usize,
    noise: &NoiseModel,
) -> Result<ReducedModel, DetectError> {
    if open_dgu >= gains.len() {
        return Err(DetectError::Config(format!("DGU index {open_dgu} out of range")));
    }
    let cl = Interconnection::open_at(plant, gains, ts, open_dgu).build()?;
    let q = cl.disturbance_cov(&noise.process_cov, &noise.measurement_cov, noise.watermark_variance);
    let c_i = cl.c.rows(2 * open_dgu, 2).into_owned();
    let d_i = cl.d_load.rows(2 * open_dgu, 2).into_owned();
    let real = minimal_realization(&cl.a, &[&cl.b_open, &cl.b_load, &q], &c_i, MINREAL_TOLERANCE);
    let nl = cl.b_load.ncols();
    let b_ref = real.b.columns(0, 2).into_owned();
    let b_load = real.b.columns(2, nl).into_owned();
    let r = {
        let r = real.basis.transpose() * &q * &real.basis;
        (&r + r.transpose()) * 0.5
    };
    let v = noise
        .measurement_cov
        .view((2 * open_dgu, 2 * open_dgu), (2, 2))
        .into_owned();
    let cb = &real.c * &b_ref;
    let sv = cb.clone().singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|s| **s > MINREAL_TOLERANCE * smax && **s > 0.0).count();
    if rank < 2 {
        return Err(DetectError::RankDeficient { rank, rows: 2 });
    }
    let model = ReducedModel {
        dgu: open_dgu,
        a: real.a,
        b_ref,
        b_load,
        c: real.c,
        d_load: d_i,
        r,
        v,
        full_order: real.full_order,
        basis: real.basis,
        cb_singular_values: sv.iter().copied().collect(),
    };
    if model.removed_fraction() > 0.9 {
        log::warn!(
            "reduced model for DGU {} keeps {} of {} states; interconnection looks degenerate",
            open_dgu + 1,
            model.order(),
            model.full_order
        );
    }
    Ok(model)
}
