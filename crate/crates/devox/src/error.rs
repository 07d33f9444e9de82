use std::path::PathBuf;

/// Errors from file I/O, the WAV codec and the evaluation harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed WAV file: {0}")]
    MalformedWav(String),

    #[error("track `{track}` is missing stem `{stem}`")]
    MissingStem { track: String, stem: String },

    #[error("invalid config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] devox_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
