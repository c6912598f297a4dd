//! Dynamic-watermarking detector for one droop-controlled DGU.

pub mod archive;
pub mod calibrate;
pub mod detector;
pub mod indicators;
pub mod kalman;
pub mod minreal;
pub mod reduced;
pub mod riccati;

pub use archive::{read_matrices, write_matrices};
pub use calibrate::{calibrate_thresholds, quantile, CalibrationOptions};
pub use detector::{AlarmPolicy, Detector, DetectorConfig, WindowRecord};
pub use indicators::{accumulate_indicators, threshold_test, AlarmDecision, IndicatorWindow, Indicators, Thresholds};
pub use kalman::KalmanState;
pub use minreal::{minimal_realization, Realization};
pub use reduced::{build_reduced_model, NoiseModel, ReducedModel};
pub use riccati::{
    fixed_point_residual, relative_residual, riccati_map, solve_riccati, solve_riccati_doubling, RiccatiOptions,
    RiccatiSolution,
};

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("reduced model violates the full-row-rank assumption on C_m B_ref (rank {rank} < {rows})")]
    RankDeficient { rank: usize, rows: usize },
    #[error("Riccati iteration did not converge in {iterations} steps (residual {residual:.3e})")]
    RiccatiNotConverged { iterations: usize, residual: f64 },
    #[error("Riccati solution is not positive definite")]
    IndefiniteCovariance,
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("indicator window underfull: {have} of {need} samples")]
    WindowUnderfull { have: usize, need: usize },
    #[error("calibration needs at least {min_windows} windows ({min_runs} runs); got {windows}")]
    TooFewWindows { windows: usize, min_windows: usize, min_runs: usize },
    #[error("matrix archive: {0}")]
    Archive(String),
    #[error("invalid detector configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Droop(#[from] wmgrid_droop::DroopError),
}
