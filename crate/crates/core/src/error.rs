use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pulses overlap or are out of order: pulse {index} starts at {start:e} s before previous ends at {prev_end:e} s")]
    OverlappingPulses { index: usize, start: f64, prev_end: f64 },

    #[error("protocol violation: expected {expected} phase, device is in {actual} phase")]
    Protocol { expected: &'static str, actual: &'static str },

    #[error("no in-plane anisotropy: N_x = {n_x}, N_y = {n_y}")]
    NoInPlaneAnisotropy { n_x: f64, n_y: f64 },

    #[error("barrier target {target:e} J unreachable: {reason}")]
    UnreachableBarrier { target: f64, reason: String },

    #[error("switching-probability slice is not monotone in current (cell {index}: {prev} -> {next}, slack {slack}); rerun with more trials")]
    NonMonotone { index: usize, prev: f64, next: f64, slack: f64 },

    #[error("switching-probability slice unusable: {0}")]
    BadSlice(String),

    #[error("slice does not bracket P_sw = {level}")]
    NotBracketed { level: f64 },

    #[error("{path}: bad IDX magic number {found:#010x}, expected {expected:#010x}")]
    IdxMagic { path: PathBuf, found: u32, expected: u32 },

    #[error("{path}: truncated IDX payload (need {needed} bytes, have {have})")]
    IdxTruncated { path: PathBuf, needed: usize, have: usize },

    #[error("image/label count mismatch: {images} images, {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
