use nalgebra::{DMatrix, DVector};

use crate::dae::Microgrid;
use crate::equilibrium::Equilibrium;
use crate::error::{ModelError, Result};
use crate::statespace::{StateSpace, TimeDomain};

/// Default continuous noise intensities (per-unit), overridable per scenario.
pub const DEFAULT_PROCESS_NOISE: f64 = 1e-8;
pub const DEFAULT_MEASUREMENT_NOISE: f64 = 1e-8;

/// Linearizes the DAE at `eq`, eliminating the algebraic variables through `dg/dy`.
pub fn linearize(model: &Microgrid, eq: &Equilibrium) -> Result<StateSpace> {
    let jac = model.jacobians(&eq.x0, &eq.y0, &eq.u0);
    let lu = jac.gy.clone().lu();
    let dy_dx = lu.solve(&jac.gx).ok_or(ModelError::SingularAlgebraic)?;
    let dy_du = lu.solve(&jac.gu).ok_or(ModelError::SingularAlgebraic)?;
    if !(dy_dx.iter().chain(dy_du.iter()).all(|v| v.is_finite())) {
        return Err(ModelError::SingularAlgebraic);
    }
    let a = &jac.fx - &jac.fy * &dy_dx;
    let b = &jac.fu - &jac.fy * &dy_du;
    let sel = output_selector(model);
    let c = -(&sel * &dy_dx);
    let d = -(&sel * &dy_du);
    let m_ref = model.n_input_ref();
    let m_load = model.n_input_load();
    let (nx, ny) = (model.n_state(), model.n_output());
    Ok(StateSpace {
        kind: TimeDomain::Continuous,
        a,
        b_ref: b.columns(0, m_ref).into_owned(),
        b_load: b.columns(m_ref, m_load).into_owned(),
        c,
        d_load: d.columns(m_ref, m_load).into_owned(),
        process_cov: DMatrix::identity(nx, nx) * DEFAULT_PROCESS_NOISE,
        measurement_cov: DMatrix::identity(ny, ny) * DEFAULT_MEASUREMENT_NOISE,
        sample_period: None,
    })
}

fn output_selector(model: &Microgrid) -> DMatrix<f64> {
    let idx = model.output_indices();
    let mut s = DMatrix::zeros(idx.len(), model.n_algebraic());
    for (row, i) in idx.into_iter().enumerate() {
        s[(row, i)] = 1.0;
    }
    s
}

/// Reduced ODE: state derivative and outputs with the algebraic variables solved out.
/// `guess` seeds the algebraic Newton solve.
pub fn reduced_rhs(
    model: &Microgrid,
    x: &DVector<f64>,
    u: &DVector<f64>,
    guess: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let y = model.solve_algebraic(x, u, guess)?;
    Ok((model.f(x, &y, u), model.output(&y)))
}

/// Central finite-difference Jacobians of the reduced ODE, `(A, B, C, D)`.
/// Each step is `h * max(1, |v|)` on the perturbed coordinate.
pub fn finite_difference(
    model: &Microgrid,
    eq: &Equilibrium,
    h: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (nx, nu, ny) = (model.n_state(), model.n_input(), model.n_output());
    let mut a = DMatrix::zeros(nx, nx);
    let mut c = DMatrix::zeros(ny, nx);
    let mut b = DMatrix::zeros(nx, nu);
    let mut d = DMatrix::zeros(ny, nu);
    for j in 0..nx {
        let step = h * eq.x0[j].abs().max(1.0);
        let mut xp = eq.x0.clone();
        let mut xm = eq.x0.clone();
        xp[j] += step;
        xm[j] -= step;
        let (fp, yp) = reduced_rhs(model, &xp, &eq.u0, &eq.y0)?;
        let (fm, ym) = reduced_rhs(model, &xm, &eq.u0, &eq.y0)?;
        a.set_column(j, &((fp - fm) / (2.0 * step)));
        c.set_column(j, &((yp - ym) / (2.0 * step)));
    }
    for j in 0..nu {
        let step = h * eq.u0[j].abs().max(1.0);
        let mut up = eq.u0.clone();
        let mut um = eq.u0.clone();
        up[j] += step;
        um[j] -= step;
        let (fp, yp) = reduced_rhs(model, &eq.x0, &up, &eq.y0)?;
        let (fm, ym) = reduced_rhs(model, &eq.x0, &um, &eq.y0)?;
        b.set_column(j, &((fp - fm) / (2.0 * step)));
        d.set_column(j, &((yp - ym) / (2.0 * step)));
    }
    Ok((a, b, c, d))
}
