//! Time-domain synthesis: colored noise, closed-loop trajectories,
//! ringdowns, lock-in demodulation and AOD calibration tones.
//!
//! Every random record is drawn from `ChaCha8Rng` seeded with the caller's
//! seed; independent signals of one simulation use separate streams.

mod aod;
mod closed_loop;
mod lockin;
mod ringdown;
mod synth;
mod timeseries;

pub use aod::{aod_deflection, aod_tone, AodTone, AOD_ACOUSTIC_VELOCITY};
pub use closed_loop::{simulate_closed_loop, ClosedLoopRecord, MIN_OVERSAMPLING};
pub use lockin::{lock_in_demodulate, lock_in_settling_time, LOCK_IN_STAGES};
pub use ringdown::simulate_ringdown;
pub use synth::{add_white_noise, synthesize_noise, synthesize_noise_fn, GENERATOR};
pub use timeseries::{SeriesMetadata, SeriesUnit, TimeSeries};
