use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("invalid configuration value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("failed to parse configuration: {0}")]
    ConfigParse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Phase difference maps outside the arcsine domain (spatial aliasing).
    #[error("angle estimate out of domain: asin argument {argument} (spatial aliasing)")]
    AngleDomain { argument: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("infeasible capacity: {agents} agents exceed mmWave {mm_max} + LTE {lte_max} slots")]
    Infeasible {
        agents: usize,
        mm_max: usize,
        lte_max: usize,
    },

    #[error("replay buffer holds {available} transitions, batch needs {requested}")]
    BufferUnderfilled { available: usize, requested: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
