//! Error type shared by all simulator stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Configuration failed validation or could not be parsed.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The stacked estimated channel matrix lost column rank, so the
    /// zero-forcing filter does not exist for this realization.
    #[error("singular equivalent channel: {0}")]
    SingularChannel(String),

    /// Fewer Monte Carlo realizations succeeded than the configured minimum.
    #[error("insufficient samples: {got} successful realizations, need {min}")]
    InsufficientSamples { got: usize, min: usize },

    /// An iterative solver failed to converge within its iteration cap.
    #[error("solver failed: {0}")]
    Solver(String),

    /// The optimization problem admits no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
