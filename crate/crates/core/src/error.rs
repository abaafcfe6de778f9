use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level m = {0} is outside the supported range 1..=26")]
    LevelOutOfRange(u32),

    #[error("point ({0}, {1}) is outside [0,1)^2")]
    PointOutOfDomain(f64, f64),

    #[error("index {index} is out of range for level {m} (dimension {dim})")]
    IndexOutOfRange { index: usize, m: u32, dim: usize },

    #[error("level mismatch: expected m = {expected}, got m = {found}")]
    LevelMismatch { expected: u32, found: u32 },

    #[error("coefficient vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("row {row} has squared norm {found}, expected {expected}")]
    UnequalRowNorms {
        row: usize,
        expected: f64,
        found: f64,
    },

    #[error("sample set is empty")]
    EmptySamples,

    #[error("sample set has {points} points but {values} values")]
    MalformedSamples { points: usize, values: usize },

    #[error("{iterations} iterations requested but only {samples} samples available")]
    IterationMismatch { iterations: usize, samples: usize },

    #[error("iteration count must be at least 1")]
    ZeroIterations,

    #[error("missing center sample for rectangle {0}")]
    MissingSample(String),

    #[error("full matrix requested at m = {0}; only m <= 7 is supported")]
    MatrixTooLarge(u32),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed model data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
