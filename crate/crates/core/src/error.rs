use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range. `key` names the offending field.
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("target is not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("class index {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("sample {sample}: epoch {epoch} is not after the newest recorded epoch {newest}")]
    OutOfOrderEpoch {
        sample: u64,
        epoch: usize,
        newest: usize,
    },

    #[error(
        "could not place {wanted} cluster centers {min_distance} apart after {attempts} attempts"
    )]
    InfeasibleCenters {
        wanted: usize,
        min_distance: f64,
        attempts: usize,
    },

    #[error("overlap at epoch index {index} with lag {lag} needs {lag} earlier epochs")]
    InsufficientHistory { index: usize, lag: usize },

    #[error("no provenance for sample {0}")]
    MissingProvenance(u64),

    #[error("malformed dataset: {0}")]
    Malformed(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(key: &'static str, reason: impl Into<String>) -> Self {
        Self::InvalidConfig {
            key,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the filesystem or by unreadable input files.
    pub fn is_io(&self) -> bool {
        matches!(self, Self::Io(_) | Self::Csv(_) | Self::Malformed(_))
    }
}
