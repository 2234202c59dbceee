use thiserror::Error;

/// Errors raised by the game model, the operators and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid adjacency at k = {k}: {reason}")]
    InvalidAdjacency { k: usize, reason: String },

    #[error("{what} did not converge within {iters} iterations (last residual {residual:e})")]
    IterationLimit {
        what: &'static str,
        iters: usize,
        residual: f64,
    },

    #[error("graph generation failed: {0}")]
    Generation(String),

    #[error("nonpositive prox scale {0}")]
    NonpositiveScale(f64),

    #[error("infeasible parameters: {0}")]
    ParameterInfeasible(String),

    #[error("parameter bounds violated at k = {k}: {failed}")]
    BoundsViolated { k: usize, failed: String },

    #[error("iteration diverged at k = {k}")]
    Divergence { k: usize },

    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("schedule out of range: {0}")]
    Schedule(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
