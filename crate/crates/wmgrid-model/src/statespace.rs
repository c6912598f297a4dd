use nalgebra::DMatrix;

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    Zoh,
    Tustin,
}

/// Linear model `x' = A x + B_ref u_ref + B_L u_L`, `y = C x + D_L u_L`.
///
/// `d_load` carries the algebraic feedthrough of load inputs to the outputs; it is
/// zero whenever load deviations are held at zero.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub kind: TimeDomain,
    pub a: DMatrix<f64>,
    pub b_ref: DMatrix<f64>,
    pub b_load: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d_load: DMatrix<f64>,
    pub process_cov: DMatrix<f64>,
    pub measurement_cov: DMatrix<f64>,
    pub sample_period: Option<f64>,
}

impl StateSpace {
    pub fn n_state(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_output(&self) -> usize {
        self.c.nrows()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.a.nrows();
        let p = self.c.nrows();
        let bad = |what: &str| Err(ModelError::Dimension(what.to_string()));
        if self.a.ncols() != n {
            return bad("A is not square");
        }
        if self.b_ref.nrows() != n || self.b_load.nrows() != n {
            return bad("B rows differ from state dimension");
        }
        if self.c.ncols() != n {
            return bad("C columns differ from state dimension");
        }
        if self.d_load.nrows() != p || self.d_load.ncols() != self.b_load.ncols() {
            return bad("D_L does not match C and B_L");
        }
        if self.process_cov.shape() != (n, n) || self.measurement_cov.shape() != (p, p) {
            return bad("noise covariance sizes");
        }
        Ok(())
    }

    /// Replaces both noise covariances with scaled identities.
    pub fn with_noise(mut self, process: f64, measurement: f64) -> Self {
        let n = self.n_state();
        let p = self.n_output();
        self.process_cov = DMatrix::identity(n, n) * process;
        self.measurement_cov = DMatrix::identity(p, p) * measurement;
        self
    }

    pub fn discretize(&self, ts: f64, method: Discretization) -> Result<StateSpace> {
        discretize(self, ts, method)
    }
}

/// Zero-order hold or bilinear discretization. Process noise maps as `R_d = R' Ts`;
/// measurement noise is unchanged.
pub fn discretize(ss: &StateSpace, ts: f64, method: Discretization) -> Result<StateSpace> {
    if ss.kind != TimeDomain::Continuous {
        return Err(ModelError::Config("model is already discrete".into()));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(ModelError::Config("sample period must be positive".into()));
    }
    ss.check()?;
    let n = ss.n_state();
    let (m_ref, m_load) = (ss.b_ref.ncols(), ss.b_load.ncols());
    let (a, b_ref, b_load, c, d_load) = match method {
        Discretization::Zoh => {
            let m = m_ref + m_load;
            let mut blk = DMatrix::zeros(n + m, n + m);
            blk.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * ts));
            blk.view_mut((0, n), (n, m_ref)).copy_from(&(&ss.b_ref * ts));
            blk.view_mut((0, n + m_ref), (n, m_load)).copy_from(&(&ss.b_load * ts));
            let e = blk.exp();
            (
                e.view((0, 0), (n, n)).into_owned(),
                e.view((0, n), (n, m_ref)).into_owned(),
                e.view((0, n + m_ref), (n, m_load)).into_owned(),
                ss.c.clone(),
                ss.d_load.clone(),
            )
        }
        Discretization::Tustin => {
            let id = DMatrix::<f64>::identity(n, n);
            let left = &id - &ss.a * (ts / 2.0);
            let inv = left
                .try_inverse()
                .ok_or_else(|| ModelError::Config("Tustin map singular at this sample period".into()))?;
            let a = &inv * (&id + &ss.a * (ts / 2.0));
            let b_ref = &inv * &ss.b_ref * ts;
            let b_load = &inv * &ss.b_load * ts;
            let c = &ss.c * &inv;
            let d_load = &ss.d_load + &ss.c * &inv * &ss.b_load * (ts / 2.0);
            (a, b_ref, b_load, c, d_load)
        }
    };
    Ok(StateSpace {
        kind: TimeDomain::Discrete,
        a,
        b_ref,
        b_load,
        c,
        d_load,
        process_cov: &ss.process_cov * ts,
        measurement_cov: ss.measurement_cov.clone(),
        sample_period: Some(ts),
    })
}
