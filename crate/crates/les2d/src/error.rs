use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("incompatible Poisson right-hand side: |sum| = {sum_abs:.3e} exceeds {limit:.3e}")]
    IncompatibleRhs { sum_abs: f64, limit: f64 },

    #[error("solution blew up at t = {time:.6} (step {step})")]
    BlowUp { time: f64, step: usize },

    #[error("non-finite gradient in batch {batch} (windows {windows:?})")]
    NonFiniteGradient { batch: usize, windows: Vec<usize> },

    #[error("window [{start}, {start}+{len}) exceeds dataset of {available} snapshots")]
    InsufficientWindow {
        start: usize,
        len: usize,
        available: usize,
    },

    #[error("closure has no trainable parameters: {0}")]
    NotTrainable(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("bad configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
