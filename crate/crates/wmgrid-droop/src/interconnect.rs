use nalgebra::DMatrix;
use wmgrid_model::{StateSpace, TimeDomain};

use crate::control::DroopGains;
use crate::DroopError;

/// Discrete plant plus the droop laws of a chosen subset of DGUs.
#[derive(Debug, Clone)]
pub struct Interconnection<'a> {
    pub plant: &'a StateSpace,
    pub gains: &'a [DroopGains],
    pub ts: f64,
    pub controlled: Vec<bool>,
}

/// Linear closed loop with state `[x; s]`, where `s` stacks the running sums
/// (through the previous sample) of every controlled DGU.
///
/// Exogenous inputs: open DGU commands, load deviations, controlled watermarks,
/// plant process noise and measurement noise (all outputs). Outputs are the true
/// `(omega, V)` deviations of every DGU.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub a: DMatrix<f64>,
    pub b_open: DMatrix<f64>,
    pub b_load: DMatrix<f64>,
    pub b_watermark: DMatrix<f64>,
    pub b_process: DMatrix<f64>,
    pub b_measurement: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d_load: DMatrix<f64>,
    pub open: Vec<usize>,
    pub controlled: Vec<usize>,
    pub n_plant: usize,
}

impl<'a> Interconnection<'a> {
    pub fn all_controlled(plant: &'a StateSpace, gains: &'a [DroopGains], ts: f64) -> Self {
        Self {
            plant,
            gains,
            ts,
            controlled: vec![true; gains.len()],
        }
    }

    /// Every DGU controlled except `open`.
    pub fn open_at(plant: &'a StateSpace, gains: &'a [DroopGains], ts: f64, open: usize) -> Self {
        let mut controlled = vec![true; gains.len()];
        if open < controlled.len() {
            controlled[open] = false;
        }
        Self {
            plant,
            gains,
            ts,
            controlled,
        }
    }

    pub fn build(&self) -> Result<ClosedLoop, DroopError> {
        let p = self.plant;
        if p.kind != TimeDomain::Discrete {
            return Err(DroopError::Config("interconnection needs a discrete plant".into()));
        }
        let n_dgu = self.gains.len();
        if p.b_ref.ncols() != 2 * n_dgu || p.c.nrows() != 2 * n_dgu || self.controlled.len() != n_dgu {
            return Err(DroopError::Config(format!(
                "plant has {} command inputs and {} outputs, expected {}",
                p.b_ref.ncols(),
                p.c.nrows(),
                2 * n_dgu
            )));
        }
        let nx = p.n_state();
        let nl = p.b_load.ncols();
        let controlled: Vec<usize> = (0..n_dgu).filter(|k| self.controlled[*k]).collect();
        let open: Vec<usize> = (0..n_dgu).filter(|k| !self.controlled[*k]).collect();
        let nz = nx + 2 * controlled.len();

        let mut a = DMatrix::zeros(nz, nz);
        let mut b_open = DMatrix::zeros(nz, 2 * open.len());
        let mut b_load = DMatrix::zeros(nz, nl);
        let mut b_watermark = DMatrix::zeros(nz, 2 * controlled.len());
        let mut b_process = DMatrix::zeros(nz, nx);
        let mut b_measurement = DMatrix::zeros(nz, 2 * n_dgu);
        let mut c = DMatrix::zeros(2 * n_dgu, nz);

        a.view_mut((0, 0), (nx, nx)).copy_from(&p.a);
        b_load.view_mut((0, 0), (nx, nl)).copy_from(&p.b_load);
        b_process.view_mut((0, 0), (nx, nx)).fill_with_identity();
        c.view_mut((0, 0), (2 * n_dgu, nx)).copy_from(&p.c);

        for (slot, &j) in controlled.iter().enumerate() {
            let g = &self.gains[j];
            let k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                g.alpha_p + g.beta_p * self.ts,
                g.alpha_q + g.beta_q * self.ts,
            ]));
            let bt = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                g.beta_p * self.ts,
                g.beta_q * self.ts,
            ]));
            let bj = p.b_ref.columns(2 * j, 2).into_owned();
            let cj = p.c.rows(2 * j, 2).into_owned();
            let dj = p.d_load.rows(2 * j, 2).into_owned();
            let bk = &bj * &k;
            let s0 = nx + 2 * slot;
            {
                let mut axx = a.view_mut((0, 0), (nx, nx));
                axx += &bk * &cj;
            }
            a.view_mut((0, s0), (nx, 2)).copy_from(&(&bj * &bt));
            a.view_mut((s0, 0), (2, nx)).copy_from(&cj);
            a.view_mut((s0, s0), (2, 2)).fill_with_identity();
            {
                let mut bl = b_load.view_mut((0, 0), (nx, nl));
                bl += &bk * &dj;
            }
            b_load.view_mut((s0, 0), (2, nl)).copy_from(&dj);
            b_watermark.view_mut((0, 2 * slot), (nx, 2)).copy_from(&bj);
            b_measurement.view_mut((0, 2 * j), (nx, 2)).copy_from(&bk);
            b_measurement.view_mut((s0, 2 * j), (2, 2)).fill_with_identity();
        }
        for (slot, &i) in open.iter().enumerate() {
            b_open
                .view_mut((0, 2 * slot), (nx, 2))
                .copy_from(&p.b_ref.columns(2 * i, 2));
        }
        Ok(ClosedLoop {
            a,
            b_open,
            b_load,
            b_watermark,
            b_process,
            b_measurement,
            c,
            d_load: p.d_load.clone(),
            open,
            controlled,
            n_plant: nx,
        })
    }
}

impl ClosedLoop {
    pub fn n_state(&self) -> usize {
        self.a.nrows()
    }

    /// Covariance of the total state disturbance: plant noise, measurement noise
    /// entering through the controlled DGUs' feedback, and their watermarks.
    pub fn disturbance_cov(
        &self,
        process_cov: &DMatrix<f64>,
        measurement_cov: &DMatrix<f64>,
        watermark_variance: [f64; 2],
    ) -> DMatrix<f64> {
        let mut v = measurement_cov.clone();
        // Measurement noise of open DGUs belongs to their own sensors, not the state.
        for &i in &self.open {
            for r in 0..v.nrows() {
                v[(r, 2 * i)] = 0.0;
                v[(r, 2 * i + 1)] = 0.0;
                v[(2 * i, r)] = 0.0;
                v[(2 * i + 1, r)] = 0.0;
            }
        }
        let mut q = &self.b_process * process_cov * self.b_process.transpose()
            + &self.b_measurement * v * self.b_measurement.transpose()
            + &self.b_watermark * self.watermark_cov(watermark_variance) * self.b_watermark.transpose();
        let qt = q.transpose();
        q += qt;
        q * 0.5
    }

    fn watermark_cov(&self, variance: [f64; 2]) -> DMatrix<f64> {
        let m = self.b_watermark.ncols();
        DMatrix::from_fn(m, m, |r, c| if r == c { variance[r % 2] } else { 0.0 })
    }

    pub fn eigenvalues_abs(&self) -> Result<Vec<f64>, DroopError> {
        Ok(wmgrid_model::eigenvalues(&self.a)?.iter().map(|z| z.norm()).collect())
    }
}
