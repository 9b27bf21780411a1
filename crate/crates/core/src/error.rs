//! Error type shared by every module.

use std::path::PathBuf;

/// Coarse classification used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input, violated precondition, malformed file.
    Validation,
    /// A numerical stage failed to converge or produced an inconsistent answer.
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("u(r) decreases at r = {r:.6e}; the potential is outside the repulsive regime")]
    NonMonotone { r: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("routes disagree: {what} ({first:.12e} vs {second:.12e}, relative {rel:.3e})")]
    RouteDisagreement {
        what: String,
        first: f64,
        second: f64,
        rel: f64,
    },

    #[error("grid too coarse: full grid gives {full:.8e}, every other node gives {coarse:.8e}")]
    CoarseGrid { full: f64, coarse: f64 },

    #[error("Temple bound inapplicable: mean {mean:.8e} is not below gamma {gamma:.8e}")]
    TempleInapplicable { mean: f64, gamma: f64 },

    #[error("asymptotic regime violated: correction {name} = {value:.4e} >= 1")]
    AsymptoticRegime { name: String, value: f64 },

    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::Precondition(_)
            | Error::Config(_)
            | Error::Io { .. }
            | Error::MemoryBudget(_)
            | Error::TempleInapplicable { .. }
            | Error::AsymptoticRegime { .. } => ErrorKind::Validation,
            Error::NonMonotone { .. }
            | Error::NoConvergence(_)
            | Error::RouteDisagreement { .. }
            | Error::CoarseGrid { .. }
            | Error::BoundViolated(_)
            | Error::NonFinite(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
