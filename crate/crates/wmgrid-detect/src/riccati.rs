use nalgebra::DMatrix;

use crate::DetectError;

#[derive(Debug, Clone, Copy)]
pub struct RiccatiOptions {
    /// Stop when the Frobenius norm of the fixed-point residual, relative to `|P|_F`, falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fixed-point steps before switching to doubling; weakly observable slow modes
    /// make plain iteration crawl.
    pub doubling_after: Option<usize>,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-13,
            max_iterations: 500_000,
            doubling_after: Some(20_000),
        }
    }
}

/// Prior covariance `P`, gain `G = P C' (C P C' + V)^-1` and innovation covariance `W`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub p: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub iterations: usize,
    /// `|riccati(P) - P|_F`.
    pub residual: f64,
}

/// One step of the covariance recursion
/// `P+ = A P A' - A P C' (C P C' + V)^-1 C P A' + R`.
pub fn riccati_map(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    v: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>, DetectError> {
    let pct = p * c.transpose();
    let s = c * &pct + v;
    let k = s
        .cholesky()
        .ok_or(DetectError::SingularInnovation)?
        .solve(&pct.transpose());
    let apa = a * p * a.transpose();
    let corr = a * &pct * k * a.transpose();
    let mut next = apa - corr + r;
    let t = next.transpose();
    next += t;
    Ok(next * 0.5)
}

pub fn fixed_point_residual(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    v: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64, DetectError> {
    Ok((riccati_map(a, c, r, v, p)? - p).norm())
}

fn finish(
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
    p: DMatrix<f64>,
    iterations: usize,
    residual: f64,
) -> Result<RiccatiSolution, DetectError> {
    if p.iter().any(|v| !v.is_finite()) || p.clone().cholesky().is_none() {
        return Err(DetectError::IndefiniteCovariance);
    }
    let w = c * &p * c.transpose() + v;
    let w = (&w + w.transpose()) * 0.5;
    let g = (w
        .clone()
        .cholesky()
        .ok_or(DetectError::SingularInnovation)?
        .solve(&(c * &p)))
    .transpose();
    Ok(RiccatiSolution {
        p,
        g,
        w,
        iterations,
        residual,
    })
}

/// Fixed-point iteration of the covariance recursion from `P0 = R`, handing over to
/// doubling if `doubling_after` steps were not enough.
pub fn solve_riccati(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    v: &DMatrix<f64>,
    opts: &RiccatiOptions,
) -> Result<RiccatiSolution, DetectError> {
    let mut p = r.clone();
    let mut residual = f64::INFINITY;
    let budget = opts
        .doubling_after
        .map_or(opts.max_iterations, |n| n.min(opts.max_iterations));
    for it in 1..=budget {
        let next = riccati_map(a, c, r, v, &p)?;
        residual = (&next - &p).norm();
        let scale = next.norm().max(f64::MIN_POSITIVE);
        p = next;
        if !(residual.is_finite() && scale.is_finite()) {
            residual = f64::INFINITY;
            break;
        }
        if residual <= opts.tolerance * scale {
            let residual = fixed_point_residual(a, c, r, v, &p)?;
            return finish(c, v, p, it, residual);
        }
    }
    if opts.doubling_after.is_some() && residual.is_finite() {
        let mut sol = solve_riccati_doubling(a, c, r, v, opts)?;
        sol.iterations += budget;
        return Ok(sol);
    }
    Err(DetectError::RiccatiNotConverged {
        iterations: budget,
        residual,
    })
}

/// `|riccati(P) - P|_F / |P|_F`.
pub fn relative_residual(sol: &RiccatiSolution) -> f64 {
    sol.residual / sol.p.norm().max(f64::MIN_POSITIVE)
}

/// Structure-preserving doubling for the same filtering Riccati equation.
pub fn solve_riccati_doubling(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    v: &DMatrix<f64>,
    opts: &RiccatiOptions,
) -> Result<RiccatiSolution, DetectError> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let vinv = v
        .clone()
        .try_inverse()
        .ok_or(DetectError::SingularInnovation)?;
    // Dual (control-form) data: A_k = A', G_k = C' V^-1 C, H_k = R.
    let mut ak = a.transpose();
    let mut gk = c.transpose() * vinv * c;
    let mut hk = r.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=200 {
        let m = &id + &gk * &hk;
        let lu = m.lu();
        let w1 = lu.solve(&ak).ok_or(DetectError::SingularInnovation)?;
        let w2 = lu.solve(&gk).ok_or(DetectError::SingularInnovation)?;
        let a_next = &ak * &w1;
        let g_next = &gk + &ak * w2 * ak.transpose();
        let h_next = &hk + ak.transpose() * &hk * &w1;
        residual = (&h_next - &hk).norm();
        let scale = h_next.norm().max(f64::MIN_POSITIVE);
        ak = a_next;
        gk = (&g_next + g_next.transpose()) * 0.5;
        hk = (&h_next + h_next.transpose()) * 0.5;
        if residual <= opts.tolerance * scale {
            let residual = fixed_point_residual(a, c, r, v, &hk)?;
            return finish(c, v, hk, it, residual);
        }
    }
    Err(DetectError::RiccatiNotConverged {
        iterations: 200,
        residual,
    })
}
