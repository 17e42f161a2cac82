use thiserror::Error;

/// Errors produced by the synthesis, simulation and file layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular or near-singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("state diverged at t = {time} s")]
    Divergence { time: f64 },

    /// The LMI search could not reach a strictly negative margin.
    #[error("LMI problem infeasible (best margin found {best_margin:.6e})")]
    Infeasible { best_margin: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
