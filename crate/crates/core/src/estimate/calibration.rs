use serde::{Deserialize, Serialize};

use super::lorentzian::{fit_lorentzian, LorentzianFit, LorentzianOptions};
use crate::constants::TWO_PI;
use crate::error::{require_positive, Error, Result};
use crate::mech::{self, OscillatorParams};
use crate::sim::{aod_deflection, TimeSeries};
use crate::spectrum::{FrequencyGrid, SpectralUnit, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    Aod,
    ThermalReference,
}

/// Detector-volts to oscillator-angle conversion, `S_θ = α² S_V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFactor {
    /// α, rad/V
    pub rad_per_volt: f64,
    pub relative_error: f64,
    pub method: CalibrationMethod,
}

impl CalibrationFactor {
    pub fn new(rad_per_volt: f64, relative_error: f64, method: CalibrationMethod) -> Result<Self> {
        require_positive("rad_per_volt", rad_per_volt)?;
        if !(relative_error.is_finite() && relative_error >= 0.0) {
            return Err(Error::Domain(format!("relative_error must be >= 0 (got {relative_error})")));
        }
        Ok(Self { rad_per_volt, relative_error, method })
    }

    /// Voltage PSD → angle PSD.
    pub fn apply(&self, volts: &Spectrum) -> Result<Spectrum> {
        if volts.unit() != SpectralUnit::Voltage {
            return Err(Error::Domain(format!("expected a voltage spectrum, got {}", volts.unit().label())));
        }
        Ok(with_averages(volts.scaled(self.rad_per_volt.powi(2), SpectralUnit::Angle)?, volts))
    }

    /// Angle PSD → voltage PSD.
    pub fn invert(&self, angle: &Spectrum) -> Result<Spectrum> {
        if angle.unit() != SpectralUnit::Angle {
            return Err(Error::Domain(format!("expected an angle spectrum, got {}", angle.unit().label())));
        }
        Ok(with_averages(angle.scaled(self.rad_per_volt.powi(-2), SpectralUnit::Voltage)?, angle))
    }
}

fn with_averages(s: Spectrum, from: &Spectrum) -> Spectrum {
    match from.averages() {
        Some(k) => s.with_averages(k),
        None => s,
    }
}

/// `α = Δθ/(2ΔV)` with `Δθ = (λ/v_c)Δf`.
pub fn aod_calibration(volt_amplitude: f64, wavelength: f64, v_acoustic: f64, f_depth: f64) -> Result<CalibrationFactor> {
    if !(volt_amplitude.is_finite() && volt_amplitude > 0.0) {
        return Err(Error::Domain(format!("tone amplitude must be > 0 V (got {volt_amplitude})")));
    }
    require_positive("f_depth", f_depth)?;
    let dtheta = aod_deflection(wavelength, v_acoustic, f_depth)?;
    CalibrationFactor::new(dtheta / (2.0 * volt_amplitude), 0.0, CalibrationMethod::Aod)
}

/// One calibration tone: drive-frequency depth and the measured amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AodPoint {
    pub f_depth: f64,
    pub volt_amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AodLinearFit {
    pub factor: CalibrationFactor,
    /// ΔV per radian of beam deflection.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Straight-line fit of ΔV against Δθ over several tones; `α = 1/(2·slope)`.
pub fn aod_calibration_fit(points: &[AodPoint], wavelength: f64, v_acoustic: f64) -> Result<AodLinearFit> {
    if points.len() < 3 {
        return Err(Error::Domain("linear AOD calibration needs at least 3 tones".into()));
    }
    let xy = points
        .iter()
        .map(|p| Ok((aod_deflection(wavelength, v_acoustic, p.f_depth)?, p.volt_amplitude)))
        .collect::<Result<Vec<_>>>()?;
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all tones have the same depth".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(slope > 0.0) {
        return Err(Error::Fit(format!("tone amplitude does not grow with depth (slope {slope})")));
    }
    let ss_res: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let sigma_slope = if n > 2.0 { (ss_res / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(AodLinearFit {
        factor: CalibrationFactor::new(0.5 / slope, sigma_slope / slope, CalibrationMethod::Aod)?,
        slope,
        intercept,
        r_squared,
    })
}

/// Amplitude of the sinusoid at `freq` Hz, by least-squares projection on
/// sine and cosine over the whole record.
pub fn tone_amplitude(ts: &TimeSeries, freq: f64) -> Result<f64> {
    require_positive("freq", freq)?;
    if ts.len() < 3 {
        return Err(Error::Domain("tone amplitude needs at least 3 samples".into()));
    }
    let w = TWO_PI * freq / ts.sample_rate();
    let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, y) in ts.samples().iter().enumerate() {
        let (s, c) = (w * i as f64).sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        ys += y * s;
        yc += y * c;
    }
    let det = ss * cc - sc * sc;
    if !(det > 0.0) {
        return Err(Error::Domain(format!("{freq} Hz is not resolvable in this record")));
    }
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    Ok(a.hypot(b))
}

/// Average of `count` consecutive segments of `period` samples, each
/// starting at a trigger.
pub fn coherent_average(ts: &TimeSeries, period: usize, count: usize) -> Result<TimeSeries> {
    if period == 0 || count == 0 || period * count > ts.len() {
        return Err(Error::Domain(format!("{count} segments of {period} samples exceed the {}-sample record", ts.len())));
    }
    let x = ts.samples();
    let avg = (0..period)
        .map(|i| (0..count).map(|k| x[k * period + i]).sum::<f64>() / count as f64)
        .collect();
    ts.map_samples(avg, ts.unit())
}

/// Peak-to-floor ratio below which a thermal reference is rejected.
pub const MIN_PEAK_TO_FLOOR: f64 = 0.1;

/// Calibrates a voltage spectrum against the known thermal motion of `osc`:
/// `α² = S_θ^int[Ω0] / S_V^peak`, with the voltage peak from a Lorentzian fit.
pub fn thermal_reference_calibration(
    volt_spectrum: &Spectrum,
    osc: &OscillatorParams,
    exclusion_halfwidth: Option<f64>,
) -> Result<(CalibrationFactor, LorentzianFit)> {
    if volt_spectrum.unit() != SpectralUnit::Voltage {
        return Err(Error::Domain(format!("expected a voltage spectrum, got {}", volt_spectrum.unit().label())));
    }
    osc.validate()?;
    require_positive("temperature", osc.temperature)?;
    let options = LorentzianOptions { q: osc.quality_factor, center_guess: osc.frequency_hz(), exclusion_halfwidth };
    let fit = fit_lorentzian(volt_spectrum, &options)?;
    if fit.peak < MIN_PEAK_TO_FLOOR * fit.floor {
        return Err(Error::Fit(format!(
            "thermal peak {:e} V²/Hz is below a tenth of the {:e} V²/Hz floor",
            fit.peak, fit.floor
        )));
    }
    let model = mech::intrinsic_spectrum(osc, &FrequencyGrid::new(vec![osc.frequency_hz()])?)?.values()[0];
    let alpha = (model / fit.peak).sqrt();
    let rel = 0.5 * fit.sigma[1] / fit.peak;
    Ok((CalibrationFactor::new(alpha, if rel.is_finite() { rel } else { 0.0 }, CalibrationMethod::ThermalReference)?, fit))
}
