//! Transforms the true sensor stream of one DGU into the stream it reports.
//!
//! Attacks only ever see sensor samples; they have no access to controller internals.

pub mod channel;
pub mod filter;
pub mod spec;

pub use channel::{apply_attack, AttackChannel};
pub use filter::{destab_filter_step, FilterState, RationalFilter};
pub use spec::{AttackSpec, AttackTemplate, TargetSignal};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AttackError {
    #[error("invalid attack: {0}")]
    Invalid(String),
    #[error("replay starts at {replay_start} s but needs {record_window} s of recorded data")]
    ReplayUnderfilled { replay_start: f64, record_window: f64 },
}
