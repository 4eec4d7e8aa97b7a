use thiserror::Error;

/// Errors produced by the solver suite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rank must be at least 1, got {0}")]
    InvalidRank(usize),

    #[error("vortex counts are all zero")]
    ZeroVortexCounts,

    #[error("vortex count vector has length {got}, expected {expected}")]
    CountLength { expected: usize, got: usize },

    #[error("index range k={k}, l={l} invalid for size {n}")]
    IndexRange { k: usize, l: usize, n: usize },

    #[error("matrix of size {0} exceeds the cofactor-expansion limit of 12")]
    SizeLimit(usize),

    #[error("barrier coefficient tau[{index}] = {value} outside [0, 1]")]
    TauOutOfRange { index: usize, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is not mean-zero (mean {mean:e})")]
    NotMeanZero { mean: f64 },

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("negative discriminant in constraint component {component}")]
    NegativeDiscriminant { component: usize },

    #[error("continuation step fell below the floor at s = {s}")]
    StepUnderflow { s: f64 },

    #[error("admissibility violated in component {component} (ratio {ratio:.6})")]
    AdmissibilityBreach { component: usize, ratio: f64 },

    #[error("exponential overflow guard tripped in component {component}")]
    Overflow { component: usize },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("mountain-pass path collapsed: {0}")]
    PathCollapse(String),

    #[error("translation search exceeded xi = {0}")]
    XiCapExceeded(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
