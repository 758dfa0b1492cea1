use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dense construction refused: 2^N exceeds the configured capacity.
    #[error("chain of {n_sites} sites exceeds dense capacity of {max_sites} sites")]
    Capacity { n_sites: usize, max_sites: usize },

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// An invariant check failed numerically. `what` names the invariant.
    #[error("numerical failure in {what}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    Numerical {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("propagator lost unitarity: |U^dag U - I|_F = {deviation:.3e} > {tolerance:.3e} (step {step_dt:.3e})")]
    Unitarity {
        deviation: f64,
        tolerance: f64,
        step_dt: f64,
    },

    #[error("bracket search for {what} failed: target {target} outside [{low}, {high}]")]
    Bracket {
        what: &'static str,
        target: f64,
        low: f64,
        high: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Capacity { .. } | Error::DimensionMismatch { .. }
        )
    }
}
