//! Linear closed loop with a filtering attack on one sensor channel, for eigenvalue checks.

use nalgebra::DMatrix;
use wmgrid_attack::{RationalFilter, TargetSignal};
use wmgrid_droop::DroopGains;
use wmgrid_model::StateSpace;

use crate::SimError;

/// State-space form `(F, g, h, d)` of the direct-form-II filter registers.
pub fn filter_state_space(f: &RationalFilter) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, f64) {
    let (b, a) = f.delay_form();
    let n = f.order();
    let mut fa = DMatrix::zeros(n, n);
    let mut g = DMatrix::zeros(n, 1);
    let mut h = DMatrix::zeros(1, n);
    for j in 0..n {
        fa[(0, j)] = -a[j + 1];
        h[(0, j)] = b[j + 1] - b[0] * a[j + 1];
    }
    for j in 1..n {
        fa[(j, j - 1)] = 1.0;
    }
    if n > 0 {
        g[(0, 0)] = 1.0;
    }
    (fa, g, h, b[0])
}

/// Transition matrix of plant, every droop law and the attack filter on `signal` of `dgu`.
/// State order: plant, droop accumulators `(P_1, Q_1, ...)`, filter registers per attacked channel.
pub fn attacked_closed_loop(
    plant: &StateSpace,
    gains: &[DroopGains],
    ts: f64,
    dgu: usize,
    signal: TargetSignal,
    filter: &RationalFilter,
) -> Result<DMatrix<f64>, SimError> {
    let n_dgu = gains.len();
    if dgu >= n_dgu {
        return Err(SimError::Scenario(format!("DGU index {} out of range", dgu + 1)));
    }
    filter
        .validate()
        .map_err(|e| SimError::Scenario(e.to_string()))?;
    let nx = plant.n_state();
    let ny = 2 * n_dgu;
    let (fa, fg, fh, fd) = filter_state_space(filter);
    let nf = fa.nrows();
    let attacked: Vec<usize> = signal
        .mask()
        .iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(c, _)| 2 * dgu + c)
        .collect();
    let nz = nx + ny + nf * attacked.len();

    // Reported outputs as a map of the full state: z = Cz [x; s; xi].
    let mut cz = DMatrix::zeros(ny, nz);
    cz.view_mut((0, 0), (ny, nx)).copy_from(&plant.c);
    let mut a = DMatrix::zeros(nz, nz);
    for (slot, &row) in attacked.iter().enumerate() {
        let f0 = nx + ny + nf * slot;
        let c_row = plant.c.row(row).into_owned();
        for j in 0..nx {
            cz[(row, j)] = fd * c_row[j];
        }
        cz.view_mut((row, f0), (1, nf)).copy_from(&fh);
        a.view_mut((f0, f0), (nf, nf)).copy_from(&fa);
        a.view_mut((f0, 0), (nf, nx)).copy_from(&(&fg * &c_row));
    }
    a.view_mut((0, 0), (nx, nx)).copy_from(&plant.a);
    for (j, g) in gains.iter().enumerate() {
        let k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            g.alpha_p + g.beta_p * ts,
            g.alpha_q + g.beta_q * ts,
        ]));
        let bt = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![g.beta_p * ts, g.beta_q * ts]));
        let bj = plant.b_ref.columns(2 * j, 2).into_owned();
        let czj = cz.rows(2 * j, 2).into_owned();
        let s0 = nx + 2 * j;
        // x+ = ... + B_j (K_j z_j + beta Ts s_j);  s_j+ = s_j + z_j
        let mut top = a.rows_mut(0, nx);
        top += &bj * &k * &czj;
        let mut sblock = a.view_mut((0, s0), (nx, 2));
        sblock += &bj * &bt;
        let mut srows = a.rows_mut(s0, 2);
        srows += &czj;
        a[(s0, s0)] += 1.0;
        a[(s0 + 1, s0 + 1)] += 1.0;
    }
    Ok(a)
}

