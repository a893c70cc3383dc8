use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical or physical validity domain.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Caller violated an operation contract (shapes, bounds, sample counts).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no resonance dip detected (depth {depth:.3e} <= 3 x noise floor {noise:.3e})")]
    NoDip { depth: f64, noise: f64 },

    #[error("photon-number fixed point did not converge after {iterations} iterations")]
    FixedPoint { iterations: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("analysis error: {0}")]
    Analysis(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
