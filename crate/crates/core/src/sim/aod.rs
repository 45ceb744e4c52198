use super::synth::record_length;
use super::timeseries::{SeriesUnit, TimeSeries};
use crate::beam::BeamParams;
use crate::constants::TWO_PI;
use crate::error::{require_non_negative, require_positive, Error, Result};

/// Acoustic velocity of the deflector crystal, m/s.
pub const AOD_ACOUSTIC_VELOCITY: f64 = 5700.0;

/// Beam deflection `(λ/v_c)Δf` for a drive-frequency step `delta_f`, rad.
pub fn aod_deflection(wavelength: f64, v_acoustic: f64, delta_f: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    require_positive("v_acoustic", v_acoustic)?;
    require_non_negative("delta_f", delta_f)?;
    Ok(wavelength / v_acoustic * delta_f)
}

/// Settings of a calibration tone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AodTone {
    pub v_acoustic: f64,
    /// Drive-frequency modulation depth Δf, Hz.
    pub f_mod_depth: f64,
    /// Modulation rate, Hz.
    pub f_mod_rate: f64,
    /// Detector volts per radian of oscillator tilt, V/rad.
    pub calibration_gain: f64,
}

/// Detector voltage produced by a sinusoidal AOD deflection of amplitude
/// `Δθ = (λ/v_c)Δf`.
///
/// A beam deflection Δθ looks like an oscillator tilt of Δθ/2 (reflection
/// doubles angles), so the tone amplitude is `ΔV = gain·Δθ/2`, and
/// `α = Δθ/2ΔV = 1/gain`.
pub fn aod_tone(beam: &BeamParams, tone: &AodTone, duration: f64, sample_rate: f64) -> Result<TimeSeries> {
    let dtheta = aod_deflection(beam.wavelength, tone.v_acoustic, tone.f_mod_depth)?;
    require_positive("calibration_gain", tone.calibration_gain)?;
    require_positive("f_mod_rate", tone.f_mod_rate)?;
    if tone.f_mod_rate >= 0.5 * sample_rate {
        return Err(Error::Domain(format!("modulation rate {} Hz is above Nyquist", tone.f_mod_rate)));
    }
    let n = record_length(duration, sample_rate)?;
    let dv = 0.5 * tone.calibration_gain * dtheta;
    let w = TWO_PI * tone.f_mod_rate / sample_rate;
    let samples = (0..n).map(|i| dv * (w * i as f64).sin()).collect();
    TimeSeries::new(sample_rate, samples, SeriesUnit::Volt)
}
