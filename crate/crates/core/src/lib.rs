//! Noise, readout and feedback-cooling model of a high-Q torsional
//! oscillator probed by an optical lever, with the time-domain simulator
//! and estimation pipeline that go with it.
//!
//! Spectra are one-sided and indexed in Hz: the variance of a signal is
//! `∫₀^∞ S(f) df`. Angular frequencies (rad/s) appear only as oscillator
//! parameters (`omega0`, damping rates).

pub mod beam;
pub mod constants;
pub mod error;
pub mod estimate;
pub mod feedback;
pub mod mech;
pub mod readout;
pub mod sim;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::{FrequencyGrid, Profile, SpectralUnit, Spectrum};
