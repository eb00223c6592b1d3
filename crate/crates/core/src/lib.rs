//! Local-realist model of an optical Bell test: inequality algebra, a chaotic
//! two-beam source, threshold detectors, closed-form predictions, a
//! Monte Carlo engine and a time-resolved waveform lab.

pub mod analytic;
pub mod detector;
pub mod error;
pub mod inequality;
pub mod montecarlo;
pub mod source;
pub mod waveform;

pub use error::{Error, Result};
