use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("expected a field with {expected} components, got {got}")]
    ComponentMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("multiplier symbol breaks conjugate symmetry (defect {0:e})")]
    NonHermitian(f64),

    #[error("dyadic index {j} outside partition range [{min}, {max}]")]
    BlockOutOfRange { j: i32, min: i32, max: i32 },

    #[error("dyadic band too narrow: {0} scales (need at least 3)")]
    BandTooNarrow(usize),

    #[error("time {t} outside trajectory span [{lo}, {hi}]")]
    TimeOutOfSpan { t: f64, lo: f64, hi: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("trajectory sampling mismatch: {0}")]
    SamplingMismatch(String),

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("initial data is not divergence free (relative divergence {0:e})")]
    NotSolenoidal(f64),

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("numerical failure at t = {t}: {reason}")]
    Numerical { t: f64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("unsupported snapshot version {found} (reader supports {supported})")]
    Version { found: u32, supported: u32 },

    #[error("truncated snapshot payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("io error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end:
    /// 0 ok, 1 config, 2 numeric failure, 3 io.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidParameter { .. }
            | Error::Json(_) => 1,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Format(_)
            | Error::Version { .. }
            | Error::Truncated { .. } => 3,
            _ => 2,
        }
    }
}
