//! Per-unit droop controllers with integral action, additive watermarks, and the
//! linear interconnection of a discrete plant with its droop laws.

pub mod control;
pub mod interconnect;
pub mod watermark;

pub use control::{DroopGains, DroopState};
pub use interconnect::{ClosedLoop, Interconnection};
pub use watermark::{inject_watermark, WatermarkChannels, WatermarkSource};

#[derive(Debug, thiserror::Error)]
pub enum DroopError {
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] wmgrid_model::ModelError),
}
