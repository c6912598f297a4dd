use nalgebra::DMatrix;

/// Orthonormal-coordinate realization `(A, B, C)` with the basis that produced it:
/// `full_state ≈ basis * reduced_state`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub basis: DMatrix<f64>,
    pub full_order: usize,
}

impl Realization {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

/// Orthonormal basis of the column range, keeping singular values above `abs_tol`.
pub(crate) fn range_basis(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > abs_tol)
        .collect();
    let mut out = DMatrix::zeros(m.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &u.column(i));
    }
    out
}

fn sigma_max(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Range basis with tolerance relative to the block's largest singular value.
pub(crate) fn range_basis_rel(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    range_basis(m, rel_tol * sigma_max(m))
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Orthonormal basis of the smallest `A`-invariant subspace containing `start`
/// (staircase of Krylov blocks with re-orthogonalization).
pub(crate) fn krylov_basis(a: &DMatrix<f64>, start: DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let abs_tol = rel_tol * sigma_max(a).max(f64::MIN_POSITIVE);
    let mut basis = start.clone();
    let mut frontier = start;
    while frontier.ncols() > 0 && basis.ncols() < n {
        let mut w = a * &frontier;
        for _ in 0..2 {
            let proj = &basis * (basis.transpose() * &w);
            w -= proj;
        }
        let fresh = range_basis(&w, abs_tol);
        if fresh.ncols() == 0 {
            break;
        }
        // Guard against drift: the new block must stay orthogonal to the old basis.
        let mut fresh = fresh;
        let proj = &basis * (basis.transpose() * &fresh);
        fresh -= proj;
        let fresh = range_basis(&fresh, 0.5);
        basis = hcat(&basis, &fresh);
        frontier = fresh;
    }
    basis
}

/// Minimal realization by controllability then observability staircases.
/// `input_blocks` are scaled independently so a tiny noise block still counts.
pub fn minimal_realization(
    a: &DMatrix<f64>,
    input_blocks: &[&DMatrix<f64>],
    c: &DMatrix<f64>,
    rel_tol: f64,
) -> Realization {
    let n = a.nrows();
    let mut start = DMatrix::zeros(n, 0);
    for blk in input_blocks {
        if blk.ncols() > 0 {
            start = hcat(&start, &range_basis_rel(blk, rel_tol));
        }
    }
    let start = range_basis(&start, 0.5);
    let vc = krylov_basis(a, start, rel_tol);
    let a1 = vc.transpose() * a * &vc;
    let c1 = c * &vc;

    let ostart = range_basis_rel(&c1.transpose(), rel_tol);
    let vo = krylov_basis(&a1.transpose(), ostart, rel_tol);
    let basis = &vc * &vo;
    let ar = basis.transpose() * a * &basis;
    let cr = c * &basis;
    let mut b_all = DMatrix::zeros(n, 0);
    for blk in input_blocks {
        b_all = hcat(&b_all, blk);
    }
    let br = basis.transpose() * b_all;
    Realization {
        a: ar,
        b: br,
        c: cr,
        basis,
        full_order: n,
    }
}
