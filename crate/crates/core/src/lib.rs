//! B2X bootstrap modem: sequence generation, waveform synthesis, channel
//! impairments, the delayed-correlation receiver and a Monte-Carlo
//! frame-error-rate harness.

pub mod channel;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod receiver;
pub mod sequences;
pub mod waveform;

pub use error::{Error, Result};
