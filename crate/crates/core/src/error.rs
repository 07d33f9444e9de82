use alloc::string::String;
use core::fmt;

/// Errors produced by the core engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Tensor or clip dimensions do not match the operation's contract.
    Shape(String),
    /// Sample rate differs from the rate the model was configured for.
    Rate { expected: u32, got: u32 },
    /// Invalid model configuration.
    Config(String),
    /// A required tensor is missing or has the wrong shape.
    Weight(String),
    /// The byte stream is not a weight container (bad magic or version).
    Format(String),
    /// The container is structurally corrupt (truncated, bad manifest, ...).
    Parse(String),
    /// A stream operation was issued in the wrong state.
    State(String),
    /// SI-SDR is undefined for an all-zero reference.
    DegenerateReference,
    /// The signal is shorter than the analysis window.
    TooShort { len: usize, min: usize },
    /// Every frame of the series was skipped; no average can be formed.
    NoValidFrames,
    /// The operation needs at least one sample.
    EmptyInput,
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Rate { expected, got } => {
                write!(f, "sample rate mismatch: expected {expected} Hz, got {got} Hz")
            }
            Error::Config(msg) => write!(f, "invalid config: {msg}"),
            Error::Weight(msg) => write!(f, "weight error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::State(msg) => write!(f, "stream state error: {msg}"),
            Error::DegenerateReference => write!(f, "reference signal is all zero"),
            Error::TooShort { len, min } => {
                write!(f, "signal too short: {len} samples, need at least {min}")
            }
            Error::NoValidFrames => write!(f, "no valid frames to average"),
            Error::EmptyInput => write!(f, "input is empty"),
        }
    }
}

impl core::error::Error for Error {}
