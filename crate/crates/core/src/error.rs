use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the toolkit.
///
/// Each variant belongs to one [`ErrorCategory`], which the command line
/// front end turns into a process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel spec: {0}")]
    InvalidChannelSpec(String),
    #[error("cannot place {n_taps} collision-free taps on a grid of {grid} samples")]
    PlacementInfeasible { n_taps: usize, grid: usize },
    #[error("CIR length {length} too short: tap at sample {index}")]
    LengthTooShort { length: usize, index: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch of {0} rows is too small for batch-norm training (need >= 2)")]
    BatchTooSmall(usize),
    #[error("invalid sparse problem: {0}")]
    InvalidProblem(String),
    #[error("IHT diverged after {iterations} iterations (iterate norm {norm:e})")]
    Diverged { iterations: usize, norm: f64 },
    #[error("observation has zero energy")]
    ZeroEnergy,
    #[error("invalid SWISS configuration: {0}")]
    InvalidSwissConfig(String),
    #[error("class {class} has {count} samples; at least 3 are needed to split")]
    ClassTooSmall { class: usize, count: usize },
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported file version {0}")]
    VersionUnsupported(u32),
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse error families; the numeric value is the CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config = 2,
    Input = 3,
    Format = 4,
    Numeric = 5,
    Io = 6,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidChannelSpec(_) | InvalidSwissConfig(_) | InvalidRatios(_) | Config(_)
            | PlacementInfeasible { .. } | Json(_) => ErrorCategory::Config,
            Missing(_) | ClassTooSmall { .. } | ShapeMismatch(_) | LengthTooShort { .. }
            | BatchTooSmall(_) | InvalidProblem(_) => ErrorCategory::Input,
            BadMagic { .. } | VersionUnsupported(_) | Truncated(_) | Corrupt(_) => {
                ErrorCategory::Format
            }
            Diverged { .. } | ZeroEnergy => ErrorCategory::Numeric,
            Io(_) => ErrorCategory::Io,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.category() as i32
    }
}
