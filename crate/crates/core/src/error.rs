//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the radar toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array dimensions disagree with the radar configuration.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// Input for which a quantity is undefined (for example an all-zero spectrum).
    #[error("undefined input: {0}")]
    UndefinedInput(String),

    /// Every spectral cell is masked, so no Doppler can be selected.
    #[error("no unmasked Doppler cell available")]
    NoCandidate,

    /// Too few spectrogram slices carry a ridge above noise.
    #[error("insufficient signal: ridge found in {found} of {total} slices")]
    InsufficientSignal { found: usize, total: usize },

    /// The tracker has no aircraft state to extrapolate from.
    #[error("track has no aircraft association")]
    NoState,

    /// Malformed file contents.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Invalid configuration file or value.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }
}
