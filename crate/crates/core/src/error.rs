use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("store is empty")]
    EmptyStore,

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("episode already finished; call reset first")]
    EpisodeFinished,

    #[error("n-step buffer has no mature target")]
    TargetNotReady,

    #[error("empty aggregation group: {0}")]
    EmptyGroup(String),

    #[error("plot input does not match mode {mode}: {reason}")]
    PlotShape { mode: String, reason: String },

    #[error("malformed snapshot at line {line}: {reason}")]
    Snapshot { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
