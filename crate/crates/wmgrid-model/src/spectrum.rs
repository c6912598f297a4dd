use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{ModelError, Result};

/// Diagonal similarity scaling that equalizes row and column norms (Parlett-Reinsch).
pub fn balance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut c2, r2) = (c, r);
            while c2 < r2 / radix {
                c2 *= radix * radix;
                f *= radix;
            }
            let mut c3 = c2;
            while c3 > r2 * radix {
                c3 /= radix * radix;
                f /= radix;
            }
            if (c3 + r2 / f) / f < 0.95 * s && f != 1.0 {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}

/// Eigenvalues of a real square matrix via balancing and a bounded real Schur iteration.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(ModelError::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Dimension("eigenvalues of a non-finite matrix".into()));
    }
    let n = m.nrows();
    let b = balance(m);
    // Stiff spectra can stall at machine-epsilon deflation; relax the tolerance stepwise.
    let schur = [f64::EPSILON, 1e-14, 1e-12, 1e-10]
        .into_iter()
        .find_map(|eps| Schur::try_new(b.clone(), eps, 1000 * n.max(1)))
        .ok_or_else(|| ModelError::Dimension("Schur iteration did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect())
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}
