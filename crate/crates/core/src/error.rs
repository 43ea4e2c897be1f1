use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration produced a non-finite state at t = {t}")]
    Integration { t: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The stacked state/input regressors do not span R^(p+q).
    #[error("data is not sufficiently exciting: regressor rank {rank} < {required}")]
    Identifiability { rank: usize, required: usize },

    #[error("ill-posed realization at step {step}: {reason}")]
    IllPosed { step: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("controller synthesis failed at step {step}: {reason}")]
    Synthesis { step: usize, reason: String },

    #[error("closed loop diverged at step {step} (|x| = {norm:.3e})")]
    Instability { step: usize, norm: f64 },

    #[error("every grid point failed: {}", .0.join("; "))]
    Tuning(Vec<String>),

    #[error("simulation of trajectory {index} failed: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", .path.display())]
    Parse { path: PathBuf, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.to_string(),
        }
    }
}
