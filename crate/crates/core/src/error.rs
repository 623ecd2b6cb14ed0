use std::io;

use thiserror::Error;

/// Errors produced by sequence generation, synthesis, channel simulation,
/// and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Frame or multiplex placement is inconsistent.
    #[error("layout error: {0}")]
    Layout(String),

    /// A channel profile could not be parsed or validated.
    #[error("profile error at line {line}: {msg}")]
    Profile { line: usize, msg: String },

    /// A sample file or sidecar is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// A simulation specification is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// The search bounds of a required-SNR search do not bracket the target.
    #[error(
        "target error rate {target} not bracketed: fer {fer_lo} at {lo} dB, fer {fer_hi} at {hi} dB"
    )]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        fer_lo: f64,
        fer_hi: f64,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}
