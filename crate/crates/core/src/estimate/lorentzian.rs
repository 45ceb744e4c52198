use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, log_periodogram_bias, LmOptions};
use crate::constants::K_B;
use crate::error::{require_positive, Error, Result};
use crate::spectrum::Spectrum;

/// Default peak exclusion, in resolution bandwidths either side of the peak.
pub const DEFAULT_EXCLUSION_RBW: f64 = 3.0;

/// `S(f) = floor + peak / (1 + 4Q²(f − center)²/center²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    /// rad²/Hz (or the input's unit)
    pub floor: f64,
    pub peak: f64,
    /// Hz
    pub center: f64,
    pub q_used: f64,
    /// Weighted log-residual norm.
    pub residual_norm: f64,
    pub exclusion_halfwidth: f64,
    /// 1σ of (floor, peak, center).
    pub sigma: [f64; 3],
    pub points_used: usize,
}

impl LorentzianFit {
    pub fn evaluate(&self, f: f64) -> f64 {
        lorentzian(self.floor, self.peak, self.center, self.q_used, f)
    }
}

fn lorentzian(floor: f64, peak: f64, center: f64, q: f64, f: f64) -> f64 {
    let x = 2.0 * q * (f - center) / center;
    floor + peak / (1.0 + x * x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzianOptions {
    /// Quality factor of the line; fixed during the fit.
    pub q: f64,
    /// Starting value of the center, Hz.
    pub center_guess: f64,
    /// Points with `|f − center_guess|` below this are ignored. Defaults to
    /// three grid spacings at the center.
    pub exclusion_halfwidth: Option<f64>,
}

fn local_spacing(freqs: &[f64], f: f64) -> f64 {
    let i = freqs.partition_point(|x| *x < f).clamp(1, freqs.len() - 1);
    freqs[i] - freqs[i - 1]
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares fit on the log of the PSD with floor, peak and center
/// free and Q fixed. Averaged spectra get weight `√N_avg` and the mean
/// log-bias `ψ(N) − ln N` of an N-average periodogram is removed.
pub fn fit_lorentzian(spec: &Spectrum, options: &LorentzianOptions) -> Result<LorentzianFit> {
    require_positive("q", options.q)?;
    require_positive("center_guess", options.center_guess)?;
    let freqs = spec.freqs();
    let (lo, hi) = (spec.grid().first(), spec.grid().last());
    if !(lo < options.center_guess && options.center_guess < hi) {
        return Err(Error::Fit(format!("center guess {} Hz outside [{lo}, {hi}] Hz", options.center_guess)));
    }
    let hw = options.center_guess / (2.0 * options.q);
    if hi - lo < 20.0 * hw {
        return Err(Error::Fit(format!("grid spans {} Hz, less than 20 half-widths ({} Hz)", hi - lo, 20.0 * hw)));
    }
    let exclusion = options
        .exclusion_halfwidth
        .unwrap_or_else(|| DEFAULT_EXCLUSION_RBW * local_spacing(freqs, options.center_guess));
    let pts: Vec<(f64, f64)> = spec
        .iter()
        .filter(|(f, s)| (f - options.center_guess).abs() >= exclusion && *s > 0.0)
        .collect();
    if pts.len() < 6 {
        return Err(Error::Fit(format!("only {} positive points outside the exclusion zone", pts.len())));
    }
    let (weight, bias) = match spec.averages() {
        Some(k) => ((k as f64).sqrt(), log_periodogram_bias(k)),
        None => (1.0, 0.0),
    };
    let q = options.q;

    // Floor from the low decile; peak from the wings through the line shape.
    let mut sorted: Vec<f64> = pts.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let floor0 = sorted[sorted.len() / 10].max(f64::MIN_POSITIVE);
    let peak0 = median(
        pts.iter()
            .map(|(f, s)| {
                let x = 2.0 * q * (f - options.center_guess) / options.center_guess;
                (s - floor0).max(0.0) * (1.0 + x * x)
            })
            .collect(),
    )
    .max(floor0 * 1e-3);

    let model = |p: &DVector<f64>| {
        let (floor, peak, c) = (p[0].exp(), p[1].exp(), p[2]);
        let mut r = DVector::zeros(pts.len());
        let mut j = DMatrix::zeros(pts.len(), 3);
        for (i, (f, s)) in pts.iter().enumerate() {
            let x = 2.0 * q * (f - c) / c;
            let l = 1.0 / (1.0 + x * x);
            let m = floor + peak * l;
            r[i] = weight * (s.ln() - bias - m.ln());
            let dx_dc = -2.0 * q * f / (c * c);
            j[(i, 0)] = -weight * floor / m;
            j[(i, 1)] = -weight * peak * l / m;
            j[(i, 2)] = -weight * peak * (-2.0 * x * l * l * dx_dc) / m;
        }
        (r, j)
    };
    let span = (hi - lo).max(10.0 * hw);
    let lower = DVector::from_vec(vec![-745.0, -745.0, (options.center_guess - span).max(lo)]);
    let upper = DVector::from_vec(vec![709.0, 709.0, (options.center_guess + span).min(hi)]);
    let init = DVector::from_vec(vec![floor0.ln(), peak0.ln(), options.center_guess]);
    let sol = levenberg_marquardt(model, init, &lower, &upper, LmOptions::default())?;
    let (floor, peak) = (sol.params[0].exp(), sol.params[1].exp());
    let s = sol.sigma();
    Ok(LorentzianFit {
        floor,
        peak,
        center: sol.params[2],
        q_used: q,
        residual_norm: sol.residual_norm(),
        exclusion_halfwidth: exclusion,
        sigma: [floor * s[0], peak * s[1], s[2]],
        points_used: pts.len(),
    })
}

/// Mode temperature from the fitted thermal peak, `T = S_th I Ω0³/(4 k_B Q)`.
pub fn mode_temperature(fit: &LorentzianFit, inertia: f64, omega0: f64, q: f64) -> Result<f64> {
    require_positive("inertia", inertia)?;
    require_positive("omega0", omega0)?;
    require_positive("q", q)?;
    Ok(fit.peak * inertia * omega0.powi(3) / (4.0 * K_B * q))
}

/// Moment of inertia from the fitted thermal peak, `I = 4 k_B T Q/(S_th Ω0³)`.
pub fn infer_inertia(fit: &LorentzianFit, temperature: f64, omega0: f64, q: f64) -> Result<f64> {
    require_positive("temperature", temperature)?;
    require_positive("omega0", omega0)?;
    require_positive("q", q)?;
    require_positive("fitted peak", fit.peak)?;
    Ok(4.0 * K_B * temperature * q / (fit.peak * omega0.powi(3)))
}

/// Density that makes the plate model reproduce I = 4.91e-17 kg·m² for the
/// 0.9 cm × 400 nm × 0.5 mm pendulum, kg/m³.
pub const PLATE_DENSITY: f64 = 2618.666_666_666_667;

/// Thin-plate torsional inertia `ρ L h w³ / 24`, kg·m².
pub fn plate_inertia(density: f64, length: f64, thickness: f64, width: f64) -> Result<f64> {
    require_positive("density", density)?;
    require_positive("length", length)?;
    require_positive("thickness", thickness)?;
    require_positive("width", width)?;
    Ok(density * length * thickness * width.powi(3) / 24.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::{self, OscillatorParams};
    use crate::spectrum::{FrequencyGrid, SpectralUnit};

    fn model_spectrum(floor: f64, peak: f64, center: f64, q: f64) -> Spectrum {
        let g = FrequencyGrid::linear(center - 60.0 * center / q, center + 60.0 * center / q, 2001).unwrap();
        Spectrum::from_fn(&g, SpectralUnit::Angle, |f| lorentzian(floor, peak, center, q, f)).unwrap()
    }

    #[test]
    fn noiseless_recovery() {
        let s = model_spectrum(1e-22, 3e-18, 35_950.0, 1e4);
        let opts = LorentzianOptions { q: 1e4, center_guess: 35_951.0, exclusion_halfwidth: None };
        let fit = fit_lorentzian(&s, &opts).unwrap();
        assert!(((fit.floor - 1e-22) / 1e-22).abs() < 1e-6);
        assert!(((fit.peak - 3e-18) / 3e-18).abs() < 1e-6);
        assert!(((fit.center - 35_950.0) / 35_950.0).abs() < 1e-6);
        assert!(fit.residual_norm < 1e-6);
    }

    #[test]
    fn recovery_with_the_peak_excluded() {
        let s = model_spectrum(2e-20, 5e-16, 1000.0, 500.0);
        let opts = LorentzianOptions { q: 500.0, center_guess: 1000.0, exclusion_halfwidth: Some(5.0) };
        let fit = fit_lorentzian(&s, &opts).unwrap();
        assert!(((fit.peak - 5e-16) / 5e-16).abs() < 1e-6);
        assert!(fit.points_used < s.len());
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = FrequencyGrid::linear(999.0, 1001.0, 101).unwrap();
        let s = Spectrum::from_fn(&g, SpectralUnit::Angle, |f| lorentzian(1.0, 10.0, 1000.0, 100.0, f)).unwrap();
        let opts = LorentzianOptions { q: 100.0, center_guess: 1000.0, exclusion_halfwidth: None };
        assert!(matches!(fit_lorentzian(&s, &opts), Err(Error::Fit(_))));
    }

    #[test]
    fn temperature_and_inertia_invert_the_thermal_peak() {
        let o = OscillatorParams::reference_device();
        let f0 = o.frequency_hz();
        let peak = mech::intrinsic_spectrum(&o, &FrequencyGrid::new(vec![f0]).unwrap()).unwrap().values()[0];
        let fit = LorentzianFit {
            floor: 1e-22,
            peak,
            center: f0,
            q_used: o.quality_factor,
            residual_norm: 0.0,
            exclusion_halfwidth: 0.0,
            sigma: [0.0; 3],
            points_used: 0,
        };
        let t = mode_temperature(&fit, o.inertia, crate::constants::TWO_PI * fit.center, o.quality_factor).unwrap();
        assert!((t - 290.0).abs() < 1e-3 * 290.0);
        let i = infer_inertia(&fit, 290.0, o.omega0, o.quality_factor).unwrap();
        assert!(((i - o.inertia) / o.inertia).abs() < 1e-3);
        let i2 = infer_inertia(&fit, 580.0, o.omega0, o.quality_factor).unwrap();
        assert!((i2 / i - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plate_model() {
        let i = plate_inertia(PLATE_DENSITY, 0.9e-2, 400e-9, 0.5e-3).unwrap();
        assert!((i - 4.91e-17).abs() < 1e-22);
        let dense = plate_inertia(3100.0, 0.9e-2, 400e-9, 0.5e-3).unwrap();
        assert!((dense - 5.8125e-17).abs() < 1e-21);
    }
}
