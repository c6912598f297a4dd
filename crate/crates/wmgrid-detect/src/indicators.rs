use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::DetectError;

#[derive(Debug, Clone)]
pub struct Indicators {
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
    /// `|trace M|`.
    pub chi1: f64,
    /// Entrywise absolute sum of `N`.
    pub chi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub chi1: f64,
    pub chi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlarmDecision {
    pub chi1_fired: bool,
    pub chi2_fired: bool,
}

impl AlarmDecision {
    pub fn alarm(&self) -> bool {
        self.chi1_fired || self.chi2_fired
    }
}

pub fn threshold_test(chi1: f64, chi2: f64, th: &Thresholds) -> AlarmDecision {
    AlarmDecision {
        chi1_fired: chi1 >= th.chi1,
        chi2_fired: chi2 >= th.chi2,
    }
}

fn finalize(sum_dd: &DMatrix<f64>, sum_ed: &DMatrix<f64>, t0: usize, gwg: &DMatrix<f64>) -> Indicators {
    let inv = 1.0 / t0 as f64;
    let mut m = sum_dd * inv - gwg;
    let mt = m.transpose();
    m += mt;
    m *= 0.5;
    let n = sum_ed * inv;
    let chi1 = m.trace().abs();
    let chi2 = n.iter().map(|v| v.abs()).sum();
    Indicators { m, n, chi1, chi2 }
}

/// Sliding window over the last `T0` residual samples `d_k` and the watermark `e[k-1]`
/// paired with each.
#[derive(Debug, Clone)]
pub struct IndicatorWindow {
    len: usize,
    stride: usize,
    gwg: DMatrix<f64>,
    d_hist: VecDeque<DVector<f64>>,
    e_hist: VecDeque<[f64; 2]>,
    sum_dd: DMatrix<f64>,
    sum_ed: DMatrix<f64>,
    pushes_since_refresh: usize,
    pushes_since_emit: usize,
    emitted: bool,
}

impl IndicatorWindow {
    /// `gwg` is `G W G'` of the steady-state filter.
    pub fn new(len: usize, stride: usize, gwg: DMatrix<f64>) -> Result<Self, DetectError> {
        if len == 0 || stride == 0 {
            return Err(DetectError::Config("window length and stride must be positive".into()));
        }
        let n = gwg.nrows();
        Ok(Self {
            len,
            stride,
            d_hist: VecDeque::with_capacity(len + 1),
            e_hist: VecDeque::with_capacity(len + 1),
            sum_dd: DMatrix::zeros(n, n),
            sum_ed: DMatrix::zeros(2, n),
            gwg,
            pushes_since_refresh: 0,
            pushes_since_emit: 0,
            emitted: false,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn filled(&self) -> usize {
        self.d_hist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_hist.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.d_hist.len() == self.len
    }

    /// Adds a sample; returns indicators when a window completes on the stride grid.
    pub fn push(&mut self, d: DVector<f64>, e_prev: [f64; 2]) -> Option<Indicators> {
        let e = DVector::from_row_slice(&e_prev);
        self.sum_dd += &d * d.transpose();
        self.sum_ed += &e * d.transpose();
        self.d_hist.push_back(d);
        self.e_hist.push_back(e_prev);
        if self.d_hist.len() > self.len {
            let d_old = self.d_hist.pop_front().expect("non-empty");
            let e_old = DVector::from_row_slice(&self.e_hist.pop_front().expect("non-empty"));
            self.sum_dd -= &d_old * d_old.transpose();
            self.sum_ed -= &e_old * d_old.transpose();
        }
        self.pushes_since_refresh += 1;
        if self.pushes_since_refresh >= self.len {
            self.refresh();
        }
        if !self.is_full() {
            return None;
        }
        self.pushes_since_emit += 1;
        if !self.emitted || self.pushes_since_emit >= self.stride {
            self.emitted = true;
            self.pushes_since_emit = 0;
            return Some(finalize(&self.sum_dd, &self.sum_ed, self.len, &self.gwg));
        }
        None
    }

    /// Recomputes the accumulators from the stored samples.
    fn refresh(&mut self) {
        let (dd, ed) = Self::sums(self.d_hist.iter(), self.e_hist.iter(), self.gwg.nrows());
        self.sum_dd = dd;
        self.sum_ed = ed;
        self.pushes_since_refresh = 0;
    }

    fn sums<'a>(
        d: impl Iterator<Item = &'a DVector<f64>>,
        e: impl Iterator<Item = &'a [f64; 2]>,
        n: usize,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut dd = DMatrix::zeros(n, n);
        let mut ed = DMatrix::zeros(2, n);
        for (d, e) in d.zip(e) {
            dd += d * d.transpose();
            ed += DVector::from_row_slice(e) * d.transpose();
        }
        (dd, ed)
    }

    /// Indicators of the current window.
    pub fn current(&self) -> Result<Indicators, DetectError> {
        if !self.is_full() {
            return Err(DetectError::WindowUnderfull {
                have: self.d_hist.len(),
                need: self.len,
            });
        }
        Ok(finalize(&self.sum_dd, &self.sum_ed, self.len, &self.gwg))
    }

    /// Indicators recomputed from scratch over the stored samples.
    pub fn batch(&self) -> Result<Indicators, DetectError> {
        if !self.is_full() {
            return Err(DetectError::WindowUnderfull {
                have: self.d_hist.len(),
                need: self.len,
            });
        }
        let (dd, ed) = Self::sums(self.d_hist.iter(), self.e_hist.iter(), self.gwg.nrows());
        Ok(finalize(&dd, &ed, self.len, &self.gwg))
    }
}

/// Indicators over an explicit sample set.
pub fn accumulate_indicators(
    d: &[DVector<f64>],
    e_prev: &[[f64; 2]],
    gwg: &DMatrix<f64>,
    t0: usize,
) -> Result<Indicators, DetectError> {
    if d.len() < t0 || e_prev.len() < t0 {
        return Err(DetectError::WindowUnderfull {
            have: d.len().min(e_prev.len()),
            need: t0,
        });
    }
    let start = d.len() - t0;
    let estart = e_prev.len() - t0;
    let (dd, ed) = IndicatorWindow::sums(d[start..].iter(), e_prev[estart..].iter(), gwg.nrows());
    Ok(finalize(&dd, &ed, t0, gwg))
}
