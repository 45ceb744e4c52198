use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::calibration::CalibrationFactor;
use super::lm::{levenberg_marquardt, log_periodogram_bias, LmOptions};
use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::feedback::{cooling_grid, occupancy_from_spectrum, Bookkeeping, FeedbackConfig, OccupancyOptions, SWEEP_GRID_POINTS};
use crate::mech::OscillatorParams;
use crate::spectrum::{SpectralUnit, Spectrum};

/// RMS of the weighted log residuals above which the closed-loop model is
/// considered a poor description of averaged data (≈1 expected).
pub const MISMATCH_RMS_AVERAGED: f64 = 2.0;
/// Same threshold for spectra without an average count (relative error).
pub const MISMATCH_RMS_EXACT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyFromData {
    pub n_eff: f64,
    /// 1σ, from the fit covariance.
    pub sigma: f64,
    /// rad/s
    pub gamma_eff: f64,
    pub sigma_gamma_eff: f64,
    /// Imprecision floor, rad²/Hz.
    pub s_imp: f64,
    /// Torque PSD at resonance, N²·m²/Hz.
    pub torque_psd: f64,
    pub residual_rms: f64,
    pub points_used: usize,
    /// Model mismatch, or most of the variance extrapolated.
    pub flagged: bool,
}

/// Closed-loop observed-spectrum model with the ideal derivative loop.
///
/// The torque PSD is structural-thermal, `S_τ(f) = S_τ0 f0/f`; the loop adds
/// `Γ_eff − Γ0` of frequency-independent damping.
#[derive(Clone, Copy, Debug)]
struct ObservedModel {
    inertia: f64,
    omega0: f64,
    q: f64,
    f0: f64,
}

struct Terms {
    /// `|χ_eff|²` per unit torque.
    mech: f64,
    /// `|χ_eff χ0⁻¹|²`
    observed_imp: f64,
    /// `|χ_eff L|²`
    physical_imp: f64,
    /// `∂ ln |χ_eff|⁻² / ∂Γ_eff`
    dlog_d_dgamma: f64,
}

impl ObservedModel {
    fn terms(&self, f: f64, gamma_eff: f64) -> Terms {
        let w = TWO_PI * f;
        let a = self.omega0 * self.omega0 - w * w;
        let g0 = self.omega0 * self.omega0 / (self.q * w);
        let gfb = gamma_eff - self.omega0 / self.q;
        let ge = g0 + gfb;
        let d = a * a + (w * ge).powi(2);
        Terms {
            mech: 1.0 / (self.inertia * self.inertia * d),
            observed_imp: (a * a + (w * g0).powi(2)) / d,
            physical_imp: (w * gfb).powi(2) / d,
            dlog_d_dgamma: 2.0 * w * w * ge / d,
        }
    }

    fn torque(&self, s_tau0: f64, f: f64) -> f64 {
        s_tau0 * self.f0 / f
    }
}

/// Non-negative least squares for `S ≈ a·m_τ + b·m_imp` in relative error at
/// fixed `Γ_eff`; returns `(a, b, log-cost)`.
fn linear_start(model: &ObservedModel, pts: &[(f64, f64)], ge: f64) -> Option<(f64, f64, f64)> {
    let basis: Vec<(f64, f64)> = pts
        .iter()
        .map(|(f, s)| {
            let t = model.terms(*f, ge);
            (model.torque(1.0, *f) * t.mech / s, t.observed_imp / s)
        })
        .collect();
    let (mut aa, mut ab, mut bb, mut ay, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (u, v) in &basis {
        aa += u * u;
        ab += u * v;
        bb += v * v;
        ay += u;
        by += v;
    }
    let det = aa * bb - ab * ab;
    let (mut a, mut b) = ((ay * bb - by * ab) / det, (by * aa - ay * ab) / det);
    if !(det > 0.0 && a > 0.0 && b > 0.0) {
        // One amplitude pinned near zero.
        let (a1, b1) = (ay / aa, by / bb);
        let cost_a = basis.iter().map(|(u, _)| (a1 * u - 1.0).powi(2)).sum::<f64>();
        let cost_b = basis.iter().map(|(_, v)| (b1 * v - 1.0).powi(2)).sum::<f64>();
        (a, b) = if cost_a < cost_b { (a1, 1e-6 * b1) } else { (1e-6 * a1, b1) };
    }
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return None;
    }
    let cost = basis.iter().map(|(u, v)| (a * u + b * v).ln().powi(2)).sum::<f64>();
    Some((a, b, cost))
}

/// Occupancy of a feedback-cooled mode from its observed (in-loop) angle
/// spectrum: fit the closed-loop model for `(S_τ, S_imp, Γ_eff)`, rebuild
/// the physical spectrum and integrate it.
pub fn occupancy_from_data(
    obs: &Spectrum,
    cal: Option<&CalibrationFactor>,
    osc: &OscillatorParams,
    fb: &FeedbackConfig,
) -> Result<OccupancyFromData> {
    osc.validate()?;
    let obs = match (obs.unit(), cal) {
        (SpectralUnit::Voltage, Some(c)) => c.apply(obs)?,
        (SpectralUnit::Angle, None) => obs.clone(),
        (SpectralUnit::Voltage, None) => return Err(Error::Domain("a voltage spectrum needs a calibration factor".into())),
        (u, _) => return Err(Error::Domain(format!("cannot interpret a {} spectrum as angle", u.label()))),
    };
    let f0 = osc.frequency_hz();
    if !(obs.grid().first() < f0 && f0 < obs.grid().last()) {
        return Err(Error::Domain(format!("spectrum does not contain the {f0} Hz resonance")));
    }
    let pts: Vec<(f64, f64)> = obs.iter().filter(|(_, s)| *s > 0.0).collect();
    if pts.len() < 6 {
        return Err(Error::Fit("fewer than 6 positive spectral points".into()));
    }
    let model = ObservedModel { inertia: osc.inertia, omega0: osc.omega0, q: osc.quality_factor, f0 };
    let (weight, bias) = match obs.averages() {
        Some(k) => ((k as f64).sqrt(), log_periodogram_bias(k)),
        None => (1.0, 0.0),
    };
    let gamma0 = osc.gamma0();

    let residuals = |p: &DVector<f64>| {
        let (s_tau0, s_imp, ge) = (p[0].exp(), p[1].exp(), p[2].exp());
        let mut r = DVector::zeros(pts.len());
        let mut j = DMatrix::zeros(pts.len(), 3);
        for (i, (f, s)) in pts.iter().enumerate() {
            let t = model.terms(*f, ge);
            let mech_part = model.torque(s_tau0, *f) * t.mech;
            let imp_part = s_imp * t.observed_imp;
            let m = mech_part + imp_part;
            r[i] = weight * (s.ln() - bias - m.ln());
            j[(i, 0)] = -weight * mech_part / m;
            j[(i, 1)] = -weight * imp_part / m;
            // ∂ ln m/∂ ln Γ_eff: mech part ∝ 1/D; imp part ∝ 1/D.
            j[(i, 2)] = weight * ge * t.dlog_d_dgamma;
        }
        (r, j)
    };

    // The model is linear in (S_τ0, S_imp) at fixed Γ_eff: scan Γ_eff on a
    // log grid, solve for the amplitudes, start from the best point.
    let g_max = 0.5 * osc.omega0;
    let mut candidates: Vec<f64> = (0..=96).map(|i| gamma0 * (g_max / gamma0).powf(i as f64 / 96.0)).collect();
    candidates.push((gamma0 + fb.gamma_fb).clamp(gamma0, g_max));
    let (mut best_cost, mut start) = (f64::INFINITY, (0.0, 0.0, gamma0));
    for ge in candidates {
        if let Some((a, b, cost)) = linear_start(&model, &pts, ge) {
            if cost < best_cost {
                best_cost = cost;
                start = (a, b, ge);
            }
        }
    }
    if !best_cost.is_finite() {
        return Err(Error::Fit("no starting point reproduces the spectrum".into()));
    }
    let (s_tau0, s_imp0, ge0) = start;
    let init = DVector::from_vec(vec![s_tau0.ln(), s_imp0.ln(), ge0.ln()]);
    let lower = DVector::from_vec(vec![-745.0, -745.0, gamma0.ln()]);
    let upper = DVector::from_vec(vec![709.0, 709.0, (0.5 * osc.omega0).ln()]);
    let sol = levenberg_marquardt(residuals, init, &lower, &upper, LmOptions::default())?;
    let params = sol.params.clone();

    let integrate = |p: &DVector<f64>| -> Result<(f64, bool)> {
        let (s_tau0, s_imp, ge) = (p[0].exp(), p[1].exp(), p[2].exp());
        let grid = cooling_grid(osc, ge, SWEEP_GRID_POINTS)?;
        let phys = Spectrum::from_fn(&grid, SpectralUnit::Angle, |f| {
            let t = model.terms(f, ge);
            model.torque(s_tau0, f) * t.mech + s_imp * t.physical_imp
        })?;
        let options = OccupancyOptions { center: Some(f0), hwhm: Some(ge / (2.0 * TWO_PI)), bookkeeping: Bookkeeping::Exact };
        let est = occupancy_from_spectrum(&phys, osc.theta_zp(), options)?;
        Ok((est.n_eff, est.tail_dominated))
    };
    let (n_eff, tail_dominated) = integrate(&params)?;

    let (sigma, sigma_gamma_eff) = match sol.covariance() {
        Some(cov) => {
            let h = 1e-4;
            let mut grad = DVector::zeros(3);
            for k in 0..3 {
                let mut up = params.clone();
                let mut dn = params.clone();
                up[k] += h;
                dn[k] -= h;
                grad[k] = (integrate(&up)?.0 - integrate(&dn)?.0) / (2.0 * h);
            }
            let var = (grad.transpose() * &cov * &grad)[(0, 0)];
            (var.max(0.0).sqrt(), params[2].exp() * cov[(2, 2)].max(0.0).sqrt())
        }
        None => (f64::NAN, f64::NAN),
    };
    let residual_rms = sol.residual_norm() / (pts.len() as f64).sqrt();
    let threshold = if obs.averages().is_some() { MISMATCH_RMS_AVERAGED } else { MISMATCH_RMS_EXACT };
    Ok(OccupancyFromData {
        n_eff,
        sigma,
        gamma_eff: params[2].exp(),
        sigma_gamma_eff,
        s_imp: params[1].exp(),
        torque_psd: params[0].exp(),
        residual_rms,
        points_used: pts.len(),
        flagged: residual_rms > threshold || tail_dominated,
    })
}
