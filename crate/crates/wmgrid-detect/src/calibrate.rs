use crate::indicators::Thresholds;
use crate::DetectError;

pub const MIN_CALIBRATION_RUNS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub quantile: f64,
    pub safety_factor: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            quantile: 0.999,
            safety_factor: 1.5,
        }
    }
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + (v[hi] - v[lo]) * frac
}

/// `chi* = safety_factor * quantile` of the per-window indicators pooled over honest runs.
/// `runs[r]` holds `(chi1, chi2)` for every window of run `r`.
pub fn calibrate_thresholds(
    runs: &[Vec<(f64, f64)>],
    opts: &CalibrationOptions,
) -> Result<Thresholds, DetectError> {
    if !(opts.quantile > 0.0 && opts.quantile < 1.0) || !(opts.safety_factor > 0.0) {
        return Err(DetectError::Config("quantile must be in (0, 1) and safety factor positive".into()));
    }
    let windows: usize = runs.iter().map(Vec::len).sum();
    let min_windows = (1.0 / (1.0 - opts.quantile)).ceil() as usize;
    let per_run = runs.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let min_runs = MIN_CALIBRATION_RUNS.max(min_windows.div_ceil(per_run));
    if runs.len() < MIN_CALIBRATION_RUNS || windows < min_windows {
        return Err(DetectError::TooFewWindows {
            windows,
            min_windows,
            min_runs,
        });
    }
    let chi1: Vec<f64> = runs.iter().flatten().map(|w| w.0).collect();
    let chi2: Vec<f64> = runs.iter().flatten().map(|w| w.1).collect();
    Ok(Thresholds {
        chi1: opts.safety_factor * quantile(&chi1, opts.quantile),
        chi2: opts.safety_factor * quantile(&chi2, opts.quantile),
    })
}
