use std::path::PathBuf;

use crate::momentum::MomentumSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("negative argument {value} passed to {what}")]
    NegativeArgument { what: &'static str, value: f64 },
    #[error("negative density {min} at grid index {index}")]
    NegativeDensity { min: f64, index: usize },
    #[error("momentum solve hit max_iter={max_iter} with residual {}", best.residual_norm)]
    MaxIterExceeded {
        max_iter: usize,
        best: Box<MomentumSolution>,
    },
    #[error("energy functional evaluated to a non-finite value")]
    NonFiniteEnergy,
    #[error("time step {dt} violates the advective limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("fixed-point iteration stopped after {iterations} iterations at residual {residual}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("solver failed at time level {level} (t = {time}): {source}")]
    AtTimeLevel {
        level: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("malformed snapshot {path:?}: {reason}")]
    MalformedSnapshot { path: Option<PathBuf>, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_level(self, level: usize, time: f64) -> Self {
        Error::AtTimeLevel {
            level,
            time,
            source: Box::new(self),
        }
    }

    /// Strips any `AtTimeLevel` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTimeLevel { source, .. } => source.root(),
            other => other,
        }
    }
}
