//! Pulse-Doppler scene synthesis and wake-vortex detection.

pub mod cli;
pub mod detect;
pub mod dsp;
mod error;
pub mod io;
pub mod params;
pub mod pipeline;
pub mod signature;
pub mod sim;
pub mod tracker;

pub use error::{Error, Result};
