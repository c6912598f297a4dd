//! Library side of the `wmgrid` command-line tool.

pub mod artifacts;
pub mod commands;
pub mod plots;
pub mod report;

/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for runtime failures, including divergence of an unattacked run.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<wmgrid_sim::SimError> for CliError {
    fn from(e: wmgrid_sim::SimError) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<artifacts::ArtifactError> for CliError {
    fn from(e: artifacts::ArtifactError) -> Self {
        match e {
            artifacts::ArtifactError::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}
