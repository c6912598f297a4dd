use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_with_seeds, RunOutcome, TimeSeries};
use crate::prepare::PreparedScenario;
use crate::seeds::SeedSet;
use crate::SimError;

/// Per-detector statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub dgu: usize,
    pub windows: usize,
    pub alarming_windows: usize,
    pub max_chi1: f64,
    pub max_chi2: f64,
    pub first_confirmed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub steps: usize,
    pub outcome: RunOutcome,
    pub detectors: Vec<DetectorSummary>,
}

impl RunSummary {
    pub fn from_series(run: usize, ts: &TimeSeries) -> Self {
        let detectors = ts
            .detectors
            .iter()
            .map(|d| DetectorSummary {
                dgu: d.dgu,
                windows: d.windows.len(),
                alarming_windows: d.windows.iter().filter(|w| w.decision.alarm()).count(),
                max_chi1: d.windows.iter().map(|w| w.chi1).fold(0.0, f64::max),
                max_chi2: d.windows.iter().map(|w| w.chi2).fold(0.0, f64::max),
                first_confirmed: d.first_confirmed,
            })
            .collect();
        Self {
            run,
            seed: ts.seeds.base,
            steps: ts.steps(),
            outcome: ts.outcome,
            detectors,
        }
    }

    pub fn first_confirmed(&self) -> Option<f64> {
        self.detectors
            .iter()
            .filter_map(|d| d.first_confirmed)
            .min_by(f64::total_cmp)
    }
}

/// Runs `n_runs` independent copies with base seeds `seed_base + run` in parallel and
/// maps each series through `f`; results come back in run order.
pub fn monte_carlo_map<T, F>(p: &PreparedScenario, n_runs: usize, seed_base: u64, f: F) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(usize, TimeSeries) -> T + Sync,
{
    if n_runs == 0 {
        return Err(SimError::Scenario("Monte-Carlo needs at least one run".into()));
    }
    (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let seeds = SeedSet::from_base(seed_base.wrapping_add(run as u64));
            run_with_seeds(p, seeds)
                .map(|ts| f(run, ts))
                .map_err(|e| SimError::Run {
                    run,
                    source: Box::new(e),
                })
        })
        .collect()
}

pub fn monte_carlo(p: &PreparedScenario, n_runs: usize, seed_base: u64) -> Result<Vec<RunSummary>, SimError> {
    monte_carlo_map(p, n_runs, seed_base, |run, ts| RunSummary::from_series(run, &ts))
}
