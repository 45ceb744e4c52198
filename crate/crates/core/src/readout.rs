//! Split-photodetector readout of the plain and mirrored optical lever.
//!
//! The angle-referred photocurrent is
//!
//! ```text
//! S_θ^phys + ¼ s S_θ^ext + s (cot ζ / k w0²)² S_x^ext + q (π/2) csc²ζ / (2η (ā k w0)²)
//! ```
//!
//! with `s = 1, q = 1` for the plain lever. The mirrored lever cancels the
//! extraneous first-order-mode noise down to a residual power ratio `s`
//! (the `suppression`) and doubles the shot noise (`q = 2`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beam::BeamParams;
use crate::constants::{HBAR, TWO_PI};
use crate::error::{require_non_negative, Error, Result};
use crate::mech::{self, OscillatorParams};
use crate::spectrum::{require_grid, FrequencyGrid, Profile, SpectralUnit, Spectrum};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lever {
    Plain,
    #[default]
    Mirrored,
}

impl Lever {
    fn shot_noise_multiplier(self) -> f64 {
        match self {
            Self::Plain => 1.0,
            Self::Mirrored => 2.0,
        }
    }
}

/// Classical noise riding on the probe beam, plus the residual fraction
/// of it left after mirrored-arm cancellation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtraneousNoise {
    /// Input tilt noise S_θ^ext, rad²/Hz.
    pub tilt_psd: Profile,
    /// Input transverse displacement noise S_x^ext, m²/Hz.
    pub displacement_psd: Profile,
    /// Radiation-force noise S_F^ext, N²/Hz.
    pub force_psd: Profile,
    /// Beam offset x0 from the rotation axis, m.
    pub beam_offset: f64,
    /// Residual power ratio of extraneous HG₁₀ noise with the mirrored arm, in [0, 1].
    pub suppression: Profile,
}

impl Default for ExtraneousNoise {
    fn default() -> Self {
        Self::none()
    }
}

impl ExtraneousNoise {
    pub fn none() -> Self {
        Self {
            tilt_psd: Profile::Constant(0.0),
            displacement_psd: Profile::Constant(0.0),
            force_psd: Profile::Constant(0.0),
            beam_offset: 0.0,
            suppression: Profile::Constant(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tilt_psd.validate("tilt_psd", 0.0, f64::INFINITY)?;
        self.displacement_psd.validate("displacement_psd", 0.0, f64::INFINITY)?;
        self.force_psd.validate("force_psd", 0.0, f64::INFINITY)?;
        self.suppression.validate("suppression", 0.0, 1.0)?;
        if !self.beam_offset.is_finite() {
            return Err(Error::Domain("beam_offset must be finite".into()));
        }
        Ok(())
    }

    fn residual(&self, lever: Lever, f: f64) -> f64 {
        match lever {
            Lever::Plain => 1.0,
            Lever::Mirrored => self.suppression.value_at(f),
        }
    }
}

/// A probe beam, the classical noise it carries and the lever geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalLever {
    pub beam: BeamParams,
    #[serde(default)]
    pub noise: ExtraneousNoise,
    #[serde(default)]
    pub lever: Lever,
}

impl OpticalLever {
    pub fn new(beam: BeamParams, noise: ExtraneousNoise, lever: Lever) -> Self {
        Self { beam, noise, lever }
    }

    /// Mirrored lever with no extraneous noise.
    pub fn quantum_limited(beam: BeamParams) -> Self {
        Self::new(beam, ExtraneousNoise::none(), Lever::Mirrored)
    }

    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        self.noise.validate()
    }

    /// Total angle-referred imprecision at `freq` Hz, rad²/Hz.
    pub fn imprecision_at(&self, freq: f64) -> Result<f64> {
        let c = imprecision_components(&self.beam, &self.noise, self.lever, freq)?;
        Ok(c.quantum + c.tilt + c.displacement)
    }

    /// Total back-action torque PSD at `freq` Hz, N²·m²/Hz.
    pub fn backaction_at(&self, freq: f64) -> f64 {
        backaction_density(&self.beam, &self.noise, freq)
    }
}

fn sin_gouy(beam: &BeamParams) -> Result<f64> {
    let s = beam.gouy_shift.sin();
    if s.abs() < 1e-12 {
        Err(Error::SingularTransduction(beam.gouy_shift))
    } else {
        Ok(s)
    }
}

/// Shot-noise imprecision `q (π/2) csc²ζ / (2η (ā k w0)²)`, rad²/Hz, flat in frequency.
pub fn angular_imprecision(beam: &BeamParams, lever: Lever) -> Result<f64> {
    beam.validate()?;
    let s = sin_gouy(beam)?;
    let akw = beam.flux_amplitude() * beam.wavenumber() * beam.waist_radius;
    Ok(lever.shot_noise_multiplier() * std::f64::consts::FRAC_PI_2
        / (2.0 * beam.efficiency * akw * akw * s * s))
}

fn backaction_density(beam: &BeamParams, noise: &ExtraneousNoise, freq: f64) -> f64 {
    let w = beam.waist_radius;
    let k = beam.wavenumber();
    let a2 = beam.photon_flux();
    let offset = 2.0 * noise.beam_offset / w;
    let quantum = 2.0 * (HBAR * k * w).powi(2) * a2 * (1.0 + offset * offset);
    let force = 2.0 * HBAR * a2 * k;
    quantum
        + force * force * noise.displacement_psd.value_at(freq)
        + noise.beam_offset.powi(2) * noise.force_psd.value_at(freq)
}

/// Back-action torque PSD
/// `2(ħ ā k w0)²[1 + (2x0/w0)²] + (2ħā²k)² S_x^ext + x0² S_F^ext`, N²·m²/Hz.
pub fn backaction_torque_psd(beam: &BeamParams, noise: &ExtraneousNoise, grid: &FrequencyGrid) -> Result<Spectrum> {
    beam.validate()?;
    noise.validate()?;
    Spectrum::from_fn(grid, SpectralUnit::Torque, |f| backaction_density(beam, noise, f))
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct ImprecisionComponents {
    quantum: f64,
    tilt: f64,
    displacement: f64,
}

fn imprecision_components(beam: &BeamParams, noise: &ExtraneousNoise, lever: Lever, freq: f64) -> Result<ImprecisionComponents> {
    let quantum = angular_imprecision(beam, lever)?;
    let residual = noise.residual(lever, freq);
    let zeta = beam.gouy_shift;
    let cot = zeta.cos() / zeta.sin();
    let lever_arm = cot / (beam.wavenumber() * beam.waist_radius.powi(2));
    Ok(ImprecisionComponents {
        quantum,
        tilt: 0.25 * residual * noise.tilt_psd.value_at(freq),
        displacement: residual * lever_arm * lever_arm * noise.displacement_psd.value_at(freq),
    })
}

/// Split-detector photocurrent PSD and its angle-referred form.
#[derive(Clone, Debug, PartialEq)]
pub struct Photocurrent {
    /// A²/Hz
    pub current: Spectrum,
    /// The bracketed angle-equivalent spectrum, rad²/Hz.
    pub angle_referred: Spectrum,
    /// Transduction `(2/π)(2ηRPkw0 sin ζ)²`, A²/rad².
    pub gain: f64,
}

/// Photocurrent PSD of the split detector given the physical angle PSD `osc_phys`.
pub fn photocurrent_psd(
    beam: &BeamParams,
    osc_phys: &Spectrum,
    noise: &ExtraneousNoise,
    lever: Lever,
    grid: &FrequencyGrid,
) -> Result<Photocurrent> {
    require_grid(grid, osc_phys.grid())?;
    if osc_phys.unit() != SpectralUnit::Angle {
        return Err(Error::Domain(format!("physical spectrum must be in rad^2/Hz, not {}", osc_phys.unit().label())));
    }
    noise.validate()?;
    let s = sin_gouy(beam)?;
    let gain = (2.0 / std::f64::consts::PI)
        * (2.0 * beam.efficiency * beam.responsivity * beam.power * beam.wavenumber() * beam.waist_radius * s).powi(2);
    let referred = osc_phys
        .iter()
        .map(|(f, phys)| {
            let c = imprecision_components(beam, noise, lever, f)?;
            Ok(phys + c.tilt + c.displacement + c.quantum)
        })
        .collect::<Result<Vec<_>>>()?;
    let current = referred.iter().map(|v| v * gain).collect();
    Ok(Photocurrent {
        current: Spectrum::new(grid.clone(), current, SpectralUnit::Current)?,
        angle_referred: Spectrum::new(grid.clone(), referred, SpectralUnit::Angle)?,
        gain,
    })
}

/// Itemized angle-referred noise budget, rad²/Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub grid: FrequencyGrid,
    pub intrinsic: Vec<f64>,
    pub back_action: Vec<f64>,
    pub imprecision_quantum: Vec<f64>,
    pub imprecision_tilt: Vec<f64>,
    pub imprecision_displacement: Vec<f64>,
    pub total: Vec<f64>,
}

impl NoiseBudget {
    pub const COLUMNS: [&'static str; 6] = [
        "intrinsic",
        "back_action",
        "imprecision_quantum",
        "imprecision_tilt",
        "imprecision_displacement",
        "total",
    ];

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "intrinsic" => &self.intrinsic,
            "back_action" => &self.back_action,
            "imprecision_quantum" => &self.imprecision_quantum,
            "imprecision_tilt" => &self.imprecision_tilt,
            "imprecision_displacement" => &self.imprecision_displacement,
            "total" => &self.total,
            _ => return None,
        })
    }

    /// Summed imprecision at each grid point.
    pub fn imprecision(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.imprecision_quantum[i] + self.imprecision_tilt[i] + self.imprecision_displacement[i])
            .collect()
    }

    pub fn physical(&self) -> Vec<f64> {
        self.intrinsic.iter().zip(&self.back_action).map(|(a, b)| a + b).collect()
    }

    pub fn total_spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.grid.clone(), self.total.clone(), SpectralUnit::Angle)
    }
}

/// Observed angle PSD `S_int + |χ0|² S_τ^ba + S_imp`, itemized.
pub fn observed_angle_psd(
    osc: &OscillatorParams,
    beam: &BeamParams,
    noise: &ExtraneousNoise,
    lever: Lever,
    grid: &FrequencyGrid,
) -> Result<NoiseBudget> {
    osc.validate()?;
    beam.validate()?;
    noise.validate()?;
    let n = grid.len();
    let mut b = NoiseBudget {
        grid: grid.clone(),
        intrinsic: Vec::with_capacity(n),
        back_action: Vec::with_capacity(n),
        imprecision_quantum: Vec::with_capacity(n),
        imprecision_tilt: Vec::with_capacity(n),
        imprecision_displacement: Vec::with_capacity(n),
        total: Vec::with_capacity(n),
    };
    for f in grid.iter() {
        let intrinsic = mech::intrinsic_density(osc, f)?;
        let back_action = mech::susceptibility(osc, f)?.norm_sqr() * backaction_density(beam, noise, f);
        let c = imprecision_components(beam, noise, lever, f)?;
        b.intrinsic.push(intrinsic);
        b.back_action.push(back_action);
        b.imprecision_quantum.push(c.quantum);
        b.imprecision_tilt.push(c.tilt);
        b.imprecision_displacement.push(c.displacement);
        b.total.push(intrinsic + back_action + c.quantum + c.tilt + c.displacement);
    }
    Ok(b)
}

/// Phonon-equivalent imprecision `S_imp / (2 S_zp[Ω0])`.
pub fn imprecision_occupancy(osc: &OscillatorParams, s_imp: f64) -> f64 {
    s_imp / (2.0 * mech::zero_point_peak(osc))
}

/// Back-action occupancy `S_τ^ba[Ω0] / (4ħ |Im χ0⁻¹[Ω0]|)`.
pub fn backaction_occupancy(osc: &OscillatorParams, s_tau_ba: f64) -> f64 {
    s_tau_ba / (4.0 * HBAR * osc.inertia * osc.omega0 * osc.gamma0())
}

/// Standard quantum limit of the optical lever.
#[derive(Clone, Debug, PartialEq)]
pub struct SqlSpectrum {
    /// `2ħ Im χ0 + √(2π) ħ |χ0|`, rad²/Hz (plain lever, η = 1, x0 = 0).
    pub spectrum: Spectrum,
    /// `S_SQL[Ω0] / S_zp[Ω0] = 1 + √(π/2)`.
    pub resonance_ratio: f64,
    /// Same ratio with the mirrored lever's doubled shot noise, `1 + √π`.
    pub mirrored_resonance_ratio: f64,
}

/// Zero-point motion plus the best imprecision/back-action tradeoff at every frequency.
pub fn sql_spectrum(osc: &OscillatorParams, grid: &FrequencyGrid) -> Result<SqlSpectrum> {
    osc.validate()?;
    let tradeoff = (TWO_PI).sqrt() * HBAR;
    let values = grid
        .iter()
        .map(|f| {
            let chi = mech::susceptibility(osc, f)?;
            Ok(2.0 * HBAR * chi.im + tradeoff * chi.norm())
        })
        .collect::<Result<Vec<_>>>()?;
    // At Ω0, Im χ0 = |χ0| and S_zp = 2ħ|χ0|.
    let chi0 = mech::susceptibility(osc, osc.frequency_hz())?;
    let zp = 2.0 * HBAR * chi0.im;
    Ok(SqlSpectrum {
        spectrum: Spectrum::new(grid.clone(), values, SpectralUnit::Angle)?,
        resonance_ratio: (zp + tradeoff * chi0.norm()) / zp,
        mirrored_resonance_ratio: (zp + 2f64.sqrt() * tradeoff * chi0.norm()) / zp,
    })
}

/// Back-action angle PSD `|χ0|² S_τ^ba` and imprecision at `freq` for a
/// beam of the given `power`; used by power sweeps.
pub fn tradeoff_terms(osc: &OscillatorParams, beam: &BeamParams, lever: Lever, freq: f64) -> Result<(f64, f64)> {
    let chi: Complex64 = mech::susceptibility(osc, freq)?;
    let ba = chi.norm_sqr() * backaction_density(beam, &ExtraneousNoise::none(), freq);
    Ok((ba, angular_imprecision(beam, lever)?))
}

/// Angle-referred ratio, in dB, of two extraneous contributions.
pub fn suppression_db(plain: f64, mirrored: f64) -> Result<f64> {
    require_non_negative("plain", plain)?;
    require_non_negative("mirrored", mirrored)?;
    Ok(10.0 * (plain / mirrored).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn osc() -> OscillatorParams {
        OscillatorParams::reference_device()
    }

    fn grid() -> FrequencyGrid {
        let f0 = osc().frequency_hz();
        FrequencyGrid::log_refined(10.0, 1e5, 300, f0, 1.0, 101).unwrap()
    }

    #[test]
    fn imprecision_matches_reported_levels() {
        let b = BeamParams::flat_mirror_probe();
        let s = angular_imprecision(&b, Lever::Mirrored).unwrap();
        assert!(rel(s.sqrt(), 2.551_147_183_264_280_4e-12) < 1e-9);
        assert!(rel(s.sqrt(), 2.56e-12) < 0.02);
        let ideal = angular_imprecision(&b.with_efficiency(1.0), Lever::Mirrored).unwrap();
        assert!(rel(ideal.sqrt(), 2.21e-12) < 0.02);
        let doubled = angular_imprecision(&b.with_power(2.0 * b.power), Lever::Mirrored).unwrap();
        assert!(rel(s / doubled, 2.0) < 1e-14);
        let plain = angular_imprecision(&b, Lever::Plain).unwrap();
        assert!(rel(s, 2.0 * plain) < 1e-15);
    }

    #[test]
    fn imprecision_diverges_without_gouy_phase() {
        let b = BeamParams::flat_mirror_probe().with_gouy_shift(0.0);
        assert!(matches!(angular_imprecision(&b, Lever::Plain), Err(Error::SingularTransduction(_))));
        let b = b.with_gouy_shift(PI);
        assert!(angular_imprecision(&b, Lever::Plain).is_err());
    }

    #[test]
    fn pendulum_imprecision_level() {
        let s = angular_imprecision(&BeamParams::pendulum_probe(), Lever::Mirrored).unwrap();
        assert!(rel(s, 1.063_760_019_776_922_3e-22) < 1e-9);
        assert!(rel(s, 1.06e-22) < 0.01);
    }

    #[test]
    fn backaction_limits() {
        let b = BeamParams::pendulum_probe();
        let g = grid();
        let s = backaction_torque_psd(&b, &ExtraneousNoise::none(), &g).unwrap();
        let expect = 2.0 * (HBAR * b.flux_amplitude() * b.wavenumber() * b.waist_radius).powi(2);
        assert!(s.values().iter().all(|v| rel(*v, expect) < 1e-14));

        let offset = ExtraneousNoise { beam_offset: b.waist_radius / 2.0, ..ExtraneousNoise::none() };
        let s = backaction_torque_psd(&b, &offset, &g).unwrap();
        assert!(rel(s.values()[0], 2.0 * expect) < 1e-14);

        let dark = b.with_power(1e-300);
        let noisy = ExtraneousNoise { beam_offset: 1e-5, force_psd: Profile::Constant(1e-20), ..ExtraneousNoise::none() };
        let s = backaction_torque_psd(&dark, &noisy, &g).unwrap();
        assert!(rel(s.values()[0], 1e-10 * 1e-20) < 1e-10);
    }

    #[test]
    fn mirrored_without_residual_reduces_to_quantum_limited_form() {
        let o = osc();
        let b = BeamParams::pendulum_probe();
        let g = grid();
        let noisy = ExtraneousNoise {
            tilt_psd: Profile::Constant(1e-18),
            displacement_psd: Profile::Constant(1e-20),
            ..ExtraneousNoise::none()
        };
        let phys = mech::intrinsic_spectrum(&o, &g).unwrap();
        let pc = photocurrent_psd(&b, &phys, &noisy, Lever::Mirrored, &g).unwrap();
        let s_imp = angular_imprecision(&b, Lever::Mirrored).unwrap();
        for ((_, out), p) in pc.angle_referred.iter().zip(phys.values()) {
            assert!(rel(out, p + s_imp) < 1e-15);
        }
        for (i, a) in pc.current.values().iter().zip(pc.angle_referred.values()) {
            assert!(rel(*i, a * pc.gain) < 1e-15);
        }
    }

    #[test]
    fn mirrored_arm_rejects_tilt_noise_by_sixty_db() {
        let b = BeamParams::pendulum_probe();
        let tilt = ExtraneousNoise {
            tilt_psd: Profile::Constant(1e-16),
            suppression: Profile::Constant(1e-6),
            ..ExtraneousNoise::none()
        };
        let o = osc();
        let g = grid();
        let plain = observed_angle_psd(&o, &b, &tilt, Lever::Plain, &g).unwrap();
        let mirrored = observed_angle_psd(&o, &b, &tilt, Lever::Mirrored, &g).unwrap();
        let db = suppression_db(plain.imprecision_tilt[0], mirrored.imprecision_tilt[0]).unwrap();
        assert!((db - 60.0).abs() < 1e-9);
    }

    #[test]
    fn gouy_quarter_turn_hides_displacement_noise() {
        let b = BeamParams::pendulum_probe();
        let noise = ExtraneousNoise { displacement_psd: Profile::Constant(1e-18), ..ExtraneousNoise::none() };
        let budget = observed_angle_psd(&osc(), &b, &noise, Lever::Plain, &grid()).unwrap();
        let s_imp = budget.imprecision_quantum[0];
        assert!(budget.imprecision_displacement.iter().all(|v| *v < 1e-12 * s_imp));
        let tilted = b.with_gouy_shift(FRAC_PI_2 / 2.0);
        let budget = observed_angle_psd(&osc(), &tilted, &noise, Lever::Plain, &grid()).unwrap();
        let expect = 1e-18 / (tilted.wavenumber() * tilted.waist_radius.powi(2)).powi(2);
        assert!(rel(budget.imprecision_displacement[0], expect) < 1e-12);
    }

    #[test]
    fn unit_suppression_equals_plain_with_doubled_shot_noise() {
        let b = BeamParams::pendulum_probe().with_gouy_shift(1.1);
        let noise = ExtraneousNoise {
            tilt_psd: Profile::Constant(3e-19),
            displacement_psd: Profile::Constant(2e-21),
            suppression: Profile::Constant(1.0),
            ..ExtraneousNoise::none()
        };
        let g = grid();
        let phys = mech::intrinsic_spectrum(&osc(), &g).unwrap();
        let m = photocurrent_psd(&b, &phys, &noise, Lever::Mirrored, &g).unwrap();
        let p = photocurrent_psd(&b, &phys, &noise, Lever::Plain, &g).unwrap();
        let extra = angular_imprecision(&b, Lever::Plain).unwrap();
        for (a, c) in m.angle_referred.values().iter().zip(p.angle_referred.values()) {
            assert!(rel(*a, c + extra) < 1e-14);
        }
    }

    #[test]
    fn photocurrent_rejects_mismatched_grid() {
        let g = grid();
        let other = FrequencyGrid::log(1.0, 10.0, 5).unwrap();
        let phys = mech::intrinsic_spectrum(&osc(), &other).unwrap();
        let r = photocurrent_psd(&BeamParams::pendulum_probe(), &phys, &ExtraneousNoise::none(), Lever::Plain, &g);
        assert!(matches!(r, Err(Error::GridMismatch(_))));
    }

    #[test]
    fn operating_point_budget() {
        let o = osc();
        let b = BeamParams::pendulum_probe();
        let g = grid();
        let budget = observed_angle_psd(&o, &b, &ExtraneousNoise::none(), Lever::Mirrored, &g).unwrap();
        assert!(rel(budget.imprecision_quantum[0], 1.06e-22) < 0.01);
        let n_imp = imprecision_occupancy(&o, budget.imprecision_quantum[0]);
        assert!(rel(n_imp, 0.052) < 0.1);
        for i in 0..g.len() {
            let sum = budget.intrinsic[i]
                + budget.back_action[i]
                + budget.imprecision_quantum[i]
                + budget.imprecision_tilt[i]
                + budget.imprecision_displacement[i];
            assert!(rel(budget.total[i], sum) < 1e-15);
        }
    }

    #[test]
    fn cold_budget_exceeds_zero_point_everywhere() {
        let o = osc().with_temperature(0.0);
        let g = grid();
        let b = BeamParams::pendulum_probe().with_power(1e-9);
        let budget = observed_angle_psd(&o, &b, &ExtraneousNoise::none(), Lever::Mirrored, &g).unwrap();
        let zp = mech::intrinsic_spectrum(&o, &g).unwrap();
        assert!(budget.total.iter().zip(zp.values()).all(|(t, z)| t > z));
    }

    #[test]
    fn sql_ratios() {
        let o = osc();
        let g = grid();
        let sql = sql_spectrum(&o, &g).unwrap();
        assert!((sql.resonance_ratio - (1.0 + FRAC_PI_2.sqrt())).abs() < 1e-9);
        assert!((sql.resonance_ratio - 2.2533).abs() < 1e-4);
        assert!((sql.mirrored_resonance_ratio - (1.0 + PI.sqrt())).abs() < 1e-9);
        // tradeoff / zero-point = √(π/2) on resonance
        let chi = mech::susceptibility(&o, o.frequency_hz()).unwrap();
        let ratio = (TWO_PI).sqrt() * HBAR * chi.norm() / (2.0 * HBAR * chi.im);
        assert!((ratio - FRAC_PI_2.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn tradeoff_product_is_power_independent() {
        let o = osc();
        let f = 30_000.0;
        let chi2 = mech::susceptibility(&o, f).unwrap().norm_sqr();
        let ideal = BeamParams::pendulum_probe().with_efficiency(1.0);
        for exp in -6..=0 {
            let beam = ideal.with_power(10f64.powi(exp));
            let (ba, imp) = tradeoff_terms(&o, &beam, Lever::Plain, f).unwrap();
            assert!(rel(ba * imp, FRAC_PI_2 * HBAR * HBAR * chi2) < 1e-12);
        }
    }
}
