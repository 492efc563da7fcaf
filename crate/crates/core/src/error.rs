use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("non-finite input at sample {index}")]
    NonFinite { index: usize },
    #[error("insufficient calibration: need at least 2 event pairs, got {pairs}")]
    InsufficientCalibration { pairs: usize },
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
    #[error("degenerate camera motion: relative translation {translation:.3e} m is within the pure-rotation limit")]
    DegenerateMotion { translation: f64 },
    #[error("session unusable: all channels are dead")]
    SessionUnusable,
    #[error("channel {channel} is dead")]
    ChannelDead { channel: usize },
    #[error("invalid correspondence: Sampson denominator vanishes")]
    InvalidCorrespondence,
    #[error("too few mask pixels: {found} < {required}")]
    TooFewPixels { found: usize, required: usize },
}

/// Coarse error classes; each maps to a distinct process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Schema,
    Config,
    CalibrationFailed,
    DegenerateMotion,
    ChannelDead,
    Input,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 3,
            ErrorClass::Schema => 4,
            ErrorClass::Config => 5,
            ErrorClass::CalibrationFailed => 6,
            ErrorClass::DegenerateMotion => 7,
            ErrorClass::ChannelDead => 8,
            ErrorClass::Input => 9,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Schema(_) | Error::Parse { .. } => ErrorClass::Schema,
            Error::Config(_) => ErrorClass::Config,
            Error::InsufficientCalibration { .. } | Error::CalibrationFailed(_) => ErrorClass::CalibrationFailed,
            Error::DegenerateMotion { .. } => ErrorClass::DegenerateMotion,
            Error::SessionUnusable | Error::ChannelDead { .. } => ErrorClass::ChannelDead,
            Error::Structural(_)
            | Error::NonFinite { .. }
            | Error::InvalidCorrespondence
            | Error::TooFewPixels { .. } => ErrorClass::Input,
        }
    }
}
