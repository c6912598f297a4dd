use wmgrid_detect::{calibrate_thresholds, CalibrationOptions};

use crate::montecarlo::monte_carlo_map;
use crate::prepare::PreparedScenario;
use crate::thresholds::{DguThresholds, ThresholdsFile, THRESHOLDS_SCHEMA};
use crate::SimError;

/// Per-detector thresholds from `n_runs` attack-free runs with base seeds `seed_base + run`.
/// `scenario_hash` is recorded for traceability.
pub fn calibrate(
    p: &PreparedScenario,
    n_runs: usize,
    seed_base: u64,
    opts: &CalibrationOptions,
    scenario_hash: &str,
) -> Result<ThresholdsFile, SimError> {
    if !p.scenario.is_attack_free() {
        return Err(SimError::Scenario("calibration needs an attack-free scenario".into()));
    }
    let per_run = monte_carlo_map(p, n_runs, seed_base, |_, ts| {
        ts.detectors
            .iter()
            .map(|d| d.windows.iter().map(|w| (w.chi1, w.chi2)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    })?;
    let mut dgus = Vec::with_capacity(p.detectors.len());
    let mut windows = 0;
    for (slot, det) in p.detectors.iter().enumerate() {
        let runs: Vec<Vec<(f64, f64)>> = per_run.iter().map(|r| r[slot].clone()).collect();
        windows += runs.iter().map(Vec::len).sum::<usize>();
        let th = calibrate_thresholds(&runs, opts)?;
        dgus.push(DguThresholds {
            index: det.dgu + 1,
            chi1: th.chi1,
            chi2: th.chi2,
        });
    }
    Ok(ThresholdsFile {
        schema: THRESHOLDS_SCHEMA,
        scenario: p.scenario.name.clone(),
        scenario_hash: scenario_hash.to_string(),
        runs: n_runs,
        seed_base,
        quantile: opts.quantile,
        safety_factor: opts.safety_factor,
        windows,
        dgus,
    })
}
