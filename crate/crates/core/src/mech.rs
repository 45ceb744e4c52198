//! Mechanics of the fundamental torsional mode.
//!
//! The mode is a structurally damped oscillator with frequency-dependent
//! damping rate `Γ0[Ω] = (Ω0/Q)(Ω0/Ω)` and susceptibility
//!
//! ```text
//! χ0[Ω] = 1 / (I (Ω0² − Ω² − iΩΓ0[Ω]))
//! ```
//!
//! The sign of the damping term is chosen so that `Im χ0 > 0` for `Ω > 0`,
//! which keeps the fluctuation-dissipation spectrum non-negative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B, TWO_PI};
use crate::error::{domain, require_non_negative, require_positive, Result};
use crate::spectrum::{FrequencyGrid, SpectralUnit, Spectrum};

/// Default Young's modulus of stoichiometric silicon nitride, Pa.
pub const SI3N4_YOUNGS_MODULUS: f64 = 272e9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Angular resonance frequency Ω0, rad/s.
    pub omega0: f64,
    pub quality_factor: f64,
    /// Moment of inertia, kg·m².
    pub inertia: f64,
    /// Bath temperature, K.
    pub temperature: f64,
}

impl OscillatorParams {
    pub fn new(omega0: f64, quality_factor: f64, inertia: f64, temperature: f64) -> Result<Self> {
        let osc = Self { omega0, quality_factor, inertia, temperature };
        osc.validate()?;
        Ok(osc)
    }

    pub fn from_frequency_hz(freq: f64, quality_factor: f64, inertia: f64, temperature: f64) -> Result<Self> {
        Self::new(TWO_PI * freq, quality_factor, inertia, temperature)
    }

    /// The device characterized in the experiment: 35.95 kHz, Q = 1.365e7,
    /// I = 5.54e-17 kg·m², at 290 K.
    pub fn reference_device() -> Self {
        Self {
            omega0: TWO_PI * 35_950.0,
            quality_factor: 1.365e7,
            inertia: 5.54e-17,
            temperature: 290.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("omega0", self.omega0)?;
        require_positive("quality_factor", self.quality_factor)?;
        require_positive("inertia", self.inertia)?;
        require_non_negative("temperature", self.temperature)
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self { temperature, ..self }
    }

    pub fn with_quality_factor(self, quality_factor: f64) -> Self {
        Self { quality_factor, ..self }
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega0 / TWO_PI
    }

    /// On-resonance energy damping rate Γ0 = Ω0/Q, rad/s.
    pub fn gamma0(&self) -> f64 {
        self.omega0 / self.quality_factor
    }

    /// Structural damping rate Γ0[Ω] at angular frequency `omega`.
    pub fn damping_rate(&self, omega: f64) -> f64 {
        self.gamma0() * self.omega0 / omega
    }

    /// Zero-point angular amplitude θ_zp = √(ħ / 2IΩ0).
    pub fn theta_zp(&self) -> f64 {
        (HBAR / (2.0 * self.inertia * self.omega0)).sqrt()
    }

    /// High-temperature thermal occupancy k_B T / ħΩ0 at resonance.
    pub fn n_th(&self) -> f64 {
        K_B * self.temperature / (HBAR * self.omega0)
    }

    /// `χ0⁻¹[Ω] = I(Ω0² − Ω² − iΩΓ0[Ω])` at angular frequency `omega`.
    pub(crate) fn inverse_susceptibility_at(&self, omega: f64) -> Complex64 {
        Complex64::new(
            self.inertia * (self.omega0 * self.omega0 - omega * omega),
            -self.inertia * omega * self.damping_rate(omega),
        )
    }
}

fn require_frequency(freq: f64) -> Result<()> {
    if freq.is_finite() && freq > 0.0 {
        Ok(())
    } else {
        domain(format!("frequency must be > 0 Hz (got {freq}); structural damping diverges at 0"))
    }
}

/// Mechanical susceptibility χ0 at `freq` Hz, rad/(N·m).
pub fn susceptibility(osc: &OscillatorParams, freq: f64) -> Result<Complex64> {
    require_frequency(freq)?;
    Ok(osc.inverse_susceptibility_at(TWO_PI * freq).inv())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyModel {
    /// Bose-Einstein factor `1/(exp(ħΩ/k_B T) − 1)`.
    Exact,
    /// Classical limit `k_B T / ħΩ`.
    HighTemperature,
}

/// Mean thermal phonon number at `freq` Hz.
pub fn thermal_occupancy(temperature: f64, freq: f64, model: OccupancyModel) -> Result<f64> {
    require_non_negative("temperature", temperature)?;
    require_frequency(freq)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * TWO_PI * freq / (K_B * temperature);
    Ok(match model {
        OccupancyModel::Exact => 1.0 / x.exp_m1(),
        OccupancyModel::HighTemperature => 1.0 / x,
    })
}

/// Thermal plus zero-point angle PSD, `4ħ(n_th[Ω] + ½) Im χ0[Ω]`, rad²/Hz.
pub fn intrinsic_spectrum(osc: &OscillatorParams, grid: &FrequencyGrid) -> Result<Spectrum> {
    osc.validate()?;
    let values = grid
        .iter()
        .map(|f| intrinsic_density(osc, f))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(grid.clone(), values, SpectralUnit::Angle)
}

pub(crate) fn intrinsic_density(osc: &OscillatorParams, freq: f64) -> Result<f64> {
    let n = thermal_occupancy(osc.temperature, freq, OccupancyModel::Exact)?;
    Ok(4.0 * HBAR * (n + 0.5) * susceptibility(osc, freq)?.im)
}

/// Thermal plus zero-point torque PSD `4ħ(n_th[Ω] + ½)·IΩΓ0[Ω]`, N²·m²/Hz.
///
/// This is the intrinsic angle spectrum divided by `|χ0|²`.
pub(crate) fn thermal_torque_density(osc: &OscillatorParams, freq: f64) -> Result<f64> {
    let n = thermal_occupancy(osc.temperature, freq, OccupancyModel::Exact)?;
    let omega = TWO_PI * freq;
    Ok(4.0 * HBAR * (n + 0.5) * osc.inertia * omega * osc.damping_rate(omega))
}

/// Peak PSD of the zero-point motion, `4θ_zp²/Γ0`, rad²/Hz.
pub fn zero_point_peak(osc: &OscillatorParams) -> f64 {
    4.0 * osc.theta_zp().powi(2) / osc.gamma0()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialGeometry {
    /// Tensile stress σ, Pa.
    pub stress: f64,
    /// Young's modulus E, Pa.
    pub youngs_modulus: f64,
    /// Ribbon width w, m.
    pub width: f64,
    /// Ribbon thickness h, m.
    pub thickness: f64,
    pub q_intrinsic: f64,
}

impl MaterialGeometry {
    pub fn validate(&self) -> Result<()> {
        require_positive("stress", self.stress)?;
        require_positive("youngs_modulus", self.youngs_modulus)?;
        require_positive("width", self.width)?;
        require_positive("thickness", self.thickness)?;
        require_positive("q_intrinsic", self.q_intrinsic)?;
        if self.width <= self.thickness {
            return domain(format!(
                "ribbon width ({}) must exceed its thickness ({})",
                self.width, self.thickness
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dilution {
    /// D_Q = (σ/2E)(w/h)².
    pub factor: f64,
    /// Diluted quality factor Q_int·D_Q.
    pub diluted_q: f64,
}

/// Dissipation dilution of a tensioned ribbon in torsion.
pub fn dilution_factor(geom: &MaterialGeometry) -> Result<Dilution> {
    geom.validate()?;
    let factor = geom.stress / (2.0 * geom.youngs_modulus) * (geom.width / geom.thickness).powi(2);
    Ok(Dilution { factor, diluted_q: geom.q_intrinsic * factor })
}

/// Effective mass `I(2/w)²` of a torsion ribbon of width `width`.
pub fn effective_mass(inertia: f64, width: f64) -> Result<f64> {
    require_positive("inertia", inertia)?;
    require_positive("width", width)?;
    Ok(inertia * (2.0 / width).powi(2))
}
