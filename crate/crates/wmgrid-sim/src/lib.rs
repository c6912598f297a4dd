//! Discrete-time closed-loop simulation: linearized plant with noise, droop
//! controllers with watermarks, sensor attacks and per-DGU detectors.

pub mod calibrate;
pub mod engine;
pub mod montecarlo;
pub mod oracle;
pub mod prepare;
pub mod scenario;
pub mod seeds;
pub mod thresholds;

use std::path::{Path, PathBuf};

pub use calibrate::calibrate;
pub use engine::{run_scenario, run_with_seeds, DetectorTrace, RunOutcome, Stream, TimeSeries};
pub use montecarlo::{monte_carlo, monte_carlo_map, DetectorSummary, RunSummary};
pub use oracle::{attacked_closed_loop, filter_state_space};
pub use prepare::{DetectorSetup, PreparedScenario};
pub use scenario::{parse_scenario, Scenario, ScenarioFile};
pub use seeds::SeedSet;
pub use thresholds::{DguThresholds, ThresholdsFile};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    InFile { path: PathBuf, message: String },
    #[error("run {run}: {source}")]
    Run { run: usize, source: Box<SimError> },
    #[error(transparent)]
    Model(#[from] wmgrid_model::ModelError),
    #[error(transparent)]
    Droop(#[from] wmgrid_droop::DroopError),
    #[error(transparent)]
    Attack(#[from] wmgrid_attack::AttackError),
    #[error(transparent)]
    Detect(#[from] wmgrid_detect::DetectError),
}

impl SimError {
    /// Prefixes the message with the file it came from.
    pub fn at(self, path: &Path) -> SimError {
        match self {
            SimError::Io { .. } | SimError::InFile { .. } => self,
            other => SimError::InFile {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        }
    }

    /// True for errors caused by user input (files, configuration).
    pub fn is_usage(&self) -> bool {
        match self {
            SimError::Parse(_)
            | SimError::Scenario(_)
            | SimError::Io { .. }
            | SimError::InFile { .. }
            | SimError::Model(wmgrid_model::ModelError::Config(_)) => true,
            SimError::Run { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
