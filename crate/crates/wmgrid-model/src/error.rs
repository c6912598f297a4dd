use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("power flow did not converge after {iterations} iterations (residual {residual:.3e})")]
    Divergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("no equilibrium found; residual history {history:?}")]
    NoEquilibrium { history: Vec<f64> },
    #[error("algebraic Jacobian is singular; model not reducible at this point")]
    SingularAlgebraic,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
