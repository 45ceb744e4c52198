//! Hermite-Gaussian probe beam and its first-order scattering.
//!
//! A transverse displacement `δx` and tilt `δθ` of a beam in the fundamental
//! mode scatter light into HG₁₀ with amplitude
//! `ā (δx/w + i·k·w·δθ/2)·e^{−iζ}`: at the waist displacement sits in the
//! amplitude quadrature and tilt in the phase quadrature, and Gouy phase
//! rotates one into the other on propagation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR, Q_E, TWO_PI};
use crate::error::{domain, require_positive, Result};

/// Highest HG order accepted by [`hg_amplitude`].
pub const MAX_HG_ORDER: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// m
    pub wavelength: f64,
    /// Waist radius w0 (1/e² intensity), m. The oscillator sits at the waist.
    pub waist_radius: f64,
    /// Optical power, W.
    pub power: f64,
    /// Detection efficiency η ∈ (0, 1].
    pub efficiency: f64,
    /// Gouy phase ζ accumulated from the oscillator to the split detector, rad.
    pub gouy_shift: f64,
    /// Detector responsivity R, A/W.
    pub responsivity: f64,
}

impl BeamParams {
    /// Builds a beam with the ideal responsivity `q_e/ħω_ℓ`.
    pub fn new(wavelength: f64, waist_radius: f64, power: f64, efficiency: f64, gouy_shift: f64) -> Result<Self> {
        require_positive("wavelength", wavelength)?;
        let beam = Self {
            wavelength,
            waist_radius,
            power,
            efficiency,
            gouy_shift,
            responsivity: ideal_responsivity(wavelength),
        };
        beam.validate()?;
        Ok(beam)
    }

    /// 5 mW of 1064 nm light with a 587 µm waist, η = 0.75, read out at ζ = π/2.
    pub fn flat_mirror_probe() -> Self {
        Self::new(1064e-9, 587e-6, 5e-3, 0.75, std::f64::consts::FRAC_PI_2)
            .expect("reference beam is valid")
    }

    /// 10 mW of 1064 nm light focused to 180 µm on the pendulum, η = 0.244.
    pub fn pendulum_probe() -> Self {
        Self::new(1064e-9, 180e-6, 10e-3, 0.244, std::f64::consts::FRAC_PI_2)
            .expect("reference beam is valid")
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("wavelength", self.wavelength)?;
        require_positive("waist_radius", self.waist_radius)?;
        require_positive("power", self.power)?;
        require_positive("responsivity", self.responsivity)?;
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return domain(format!("efficiency must lie in (0, 1] (got {})", self.efficiency));
        }
        if !self.gouy_shift.is_finite() {
            return domain("gouy_shift must be finite");
        }
        Ok(())
    }

    pub fn with_power(self, power: f64) -> Self {
        Self { power, ..self }
    }

    pub fn with_efficiency(self, efficiency: f64) -> Self {
        Self { efficiency, ..self }
    }

    pub fn with_gouy_shift(self, gouy_shift: f64) -> Self {
        Self { gouy_shift, ..self }
    }

    pub fn wavenumber(&self) -> f64 {
        TWO_PI / self.wavelength
    }

    /// Photon energy ħω_ℓ, J.
    pub fn photon_energy(&self) -> f64 {
        HBAR * TWO_PI * C / self.wavelength
    }

    /// Mean photon flux ā² = P/ħω_ℓ, 1/s.
    pub fn photon_flux(&self) -> f64 {
        self.power / self.photon_energy()
    }

    /// Mean photon-flux amplitude ā, 1/√s.
    pub fn flux_amplitude(&self) -> f64 {
        self.photon_flux().sqrt()
    }

    /// z_R = k w0² / 2.
    pub fn rayleigh_length(&self) -> f64 {
        0.5 * self.wavenumber() * self.waist_radius.powi(2)
    }
}

/// `q_e / ħω_ℓ`, A/W.
pub fn ideal_responsivity(wavelength: f64) -> f64 {
    Q_E * wavelength / (HBAR * TWO_PI * C)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    /// Plane phase front at the waist.
    Flat,
    Radius(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamStateAtPlane {
    pub axial_position: f64,
    pub radius: f64,
    pub curvature: Curvature,
    pub gouy: f64,
}

/// Gaussian beam parameters at axial position `z` (waist at `z = 0`).
pub fn propagate(beam: &BeamParams, z: f64) -> BeamStateAtPlane {
    let z_r = beam.rayleigh_length();
    let u = z / z_r;
    let curvature = if z == 0.0 { Curvature::Flat } else { Curvature::Radius(z * (1.0 + 1.0 / (u * u))) };
    BeamStateAtPlane {
        axial_position: z,
        radius: beam.waist_radius * (1.0 + u * u).sqrt(),
        curvature,
        gouy: u.atan(),
    }
}

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence.
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Real transverse amplitude u_mn(x, y) of the HG_mn mode at `plane`,
/// normalized so that `∫∫ u_mn² dx dy = 1`.
pub fn hg_amplitude(m: u32, n: u32, x: f64, y: f64, plane: &BeamStateAtPlane) -> Result<f64> {
    if m > MAX_HG_ORDER || n > MAX_HG_ORDER {
        return domain(format!("HG order ({m}, {n}) exceeds the supported maximum {MAX_HG_ORDER}"));
    }
    let w = plane.radius;
    let norm = (2.0 / std::f64::consts::PI).sqrt() / w
        / (2f64.powi((m + n) as i32) * factorial(m) * factorial(n)).sqrt();
    let s = std::f64::consts::SQRT_2 / w;
    Ok(norm * (-(x * x + y * y) / (w * w)).exp() * hermite(m, s * x) * hermite(n, s * y))
}

/// True when `δx ≪ w` and `δθ ≪ 1/(k w)`, i.e. first-order scattering is valid.
pub fn is_linear_regime(beam: &BeamParams, plane: &BeamStateAtPlane, delta_x: f64, delta_theta: f64) -> bool {
    const SMALL: f64 = 0.1;
    delta_x.abs() < SMALL * plane.radius
        && delta_theta.abs() < SMALL / (beam.wavenumber() * plane.radius)
}

/// HG₁₀ amplitude (photon-flux units, 1/√s) scattered out of the
/// fundamental mode by a displacement `delta_x` and tilt `delta_theta`
/// applied at `plane`.
pub fn scatter_to_hg10(beam: &BeamParams, plane: &BeamStateAtPlane, delta_x: f64, delta_theta: f64) -> Complex64 {
    if !is_linear_regime(beam, plane, delta_x, delta_theta) {
        log::warn!(
            "scatter_to_hg10 outside the linear regime (δx = {delta_x:e} m, δθ = {delta_theta:e} rad, w = {:e} m)",
            plane.radius
        );
    }
    let w = plane.radius;
    let k = beam.wavenumber();
    let amplitude = Complex64::new(delta_x / w, 0.5 * k * w * delta_theta);
    beam.flux_amplitude() * amplitude * Complex64::from_polar(1.0, -plane.gouy)
}

/// Split-detector overlap coefficient `D_k` of HG_{2k+1,0}.
///
/// `Σ D_k² = π/2`; this is the sum that sets the quantum imprecision of the
/// split-detector optical lever.
pub fn split_detector_coefficient(k: u32) -> f64 {
    // D_k² = c_k/(2k+1) with c_k = (2k)!/(4^k k!²), built up without factorials.
    let mut c = 1.0;
    for j in 1..=k {
        c *= (2 * j - 1) as f64 / (2 * j) as f64;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * (c / (2 * k + 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn beam() -> BeamParams {
        BeamParams::flat_mirror_probe()
    }

    /// Brute-force midpoint-rule overlap ∫∫ u_a u_b over ±6w with 600 points/axis.
    fn overlap(a: (u32, u32), b: (u32, u32), plane: &BeamStateAtPlane) -> f64 {
        let n = 600;
        let half = 6.0 * plane.radius;
        let h = 2.0 * half / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| -half + (i as f64 + 0.5) * h).collect();
        let mut total = 0.0;
        for &x in &xs {
            for &y in &xs {
                total += hg_amplitude(a.0, a.1, x, y, plane).unwrap() * hg_amplitude(b.0, b.1, x, y, plane).unwrap();
            }
        }
        total * h * h
    }

    #[test]
    fn propagation_landmarks() {
        let b = beam();
        let waist = propagate(&b, 0.0);
        assert_eq!(waist.radius, b.waist_radius);
        assert_eq!(waist.gouy, 0.0);
        assert_eq!(waist.curvature, Curvature::Flat);

        let zr = b.rayleigh_length();
        let at_zr = propagate(&b, zr);
        assert!((at_zr.radius - b.waist_radius * 2f64.sqrt()).abs() < 1e-15);
        assert!((at_zr.gouy - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(at_zr.curvature, Curvature::Radius(2.0 * zr));

        let far = propagate(&b, 1e6 * zr);
        assert!((far.gouy - FRAC_PI_2).abs() < 1e-5);
        assert!((far.radius / (1e6 * zr) - b.waist_radius / zr).abs() < 1e-12 * b.waist_radius / zr * 1e6);
        assert!(propagate(&b, -zr).gouy < 0.0);
    }

    #[test]
    fn hermite_recurrence_matches_explicit_forms() {
        for &x in &[-1.3, 0.0, 0.4, 2.2] {
            assert_eq!(hermite(0, x), 1.0);
            assert_eq!(hermite(1, x), 2.0 * x);
            assert!((hermite(2, x) - (4.0 * x * x - 2.0)).abs() < 1e-12);
            assert!((hermite(3, x) - (8.0 * x.powi(3) - 12.0 * x)).abs() < 1e-12);
            assert!((hermite(4, x) - (16.0 * x.powi(4) - 48.0 * x * x + 12.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn low_order_normalization() {
        let plane = propagate(&beam(), 0.0);
        assert!((overlap((0, 0), (0, 0), &plane) - 1.0).abs() < 1e-6);
        assert!(overlap((0, 0), (1, 0), &plane).abs() < 1e-8);
        assert!((overlap((1, 0), (1, 0), &plane) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn orthonormal_up_to_total_order_six() {
        // Separable: the 2-D overlap is the product of two 1-D overlaps, each
        // checked by brute-force quadrature on a 2048-point grid over ±6w.
        let plane = propagate(&beam(), 0.37 * beam().rayleigh_length());
        let w = plane.radius;
        let n = 2048;
        let h = 12.0 * w / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| -6.0 * w + (i as f64 + 0.5) * h).collect();
        // 1-D factor: u_mn(x, 0) / u_00-like y-part.
        let one_d = |m: u32, x: f64| {
            hg_amplitude(m, 0, x, 0.0, &plane).unwrap() / hg_amplitude(0, 0, 0.0, 0.0, &plane).unwrap().sqrt()
        };
        let mut inner = [[0.0; 7]; 7];
        for (a, row) in inner.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = xs.iter().map(|&x| one_d(a as u32, x) * one_d(b as u32, x)).sum::<f64>() * h;
            }
        }
        for m in 0..=6 {
            for n in 0..=(6 - m) {
                for mp in 0..=6 {
                    for np in 0..=(6 - mp) {
                        let v = inner[m][mp] * inner[n][np];
                        let expect = if m == mp && n == np { 1.0 } else { 0.0 };
                        assert!((v - expect).abs() < 1e-6, "({m},{n})·({mp},{np}) = {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn order_guard() {
        let plane = propagate(&beam(), 0.0);
        assert!(hg_amplitude(21, 0, 0.0, 0.0, &plane).is_err());
        assert!(hg_amplitude(20, 20, 1e-4, 1e-4, &plane).unwrap().is_finite());
    }

    #[test]
    fn waist_scattering_quadratures() {
        let b = beam();
        let waist = propagate(&b, 0.0);
        let theta = 1e-9;
        let tilt = scatter_to_hg10(&b, &waist, 0.0, theta);
        assert_eq!(tilt.re, 0.0);
        let expect = b.flux_amplitude() * b.wavenumber() * b.waist_radius * theta / 2.0;
        assert!((tilt.im - expect).abs() < 1e-12 * expect);

        let d = 1e-9;
        let shift = scatter_to_hg10(&b, &waist, d, 0.0);
        assert_eq!(shift.im, 0.0);
        assert!((shift.re - b.flux_amplitude() * d / b.waist_radius).abs() < 1e-12 * shift.re);
    }

    #[test]
    fn gouy_quarter_turn_moves_tilt_into_displacement_quadrature() {
        let b = beam();
        let waist = propagate(&b, 0.0);
        let quarter = BeamStateAtPlane { gouy: FRAC_PI_2, ..waist };
        let c = scatter_to_hg10(&b, &quarter, 0.0, 1e-9);
        assert!(c.im.abs() < 1e-12 * c.norm());
        assert!(c.re > 0.0);
    }

    #[test]
    fn scattering_is_linear_and_rotates_with_gouy() {
        let b = beam();
        let plane = propagate(&b, 0.8 * b.rayleigh_length());
        let (x1, t1, x2, t2) = (3e-9, 2e-10, -1e-9, 5e-10);
        let sum = scatter_to_hg10(&b, &plane, x1 + x2, t1 + t2);
        let parts = scatter_to_hg10(&b, &plane, x1, t1) + scatter_to_hg10(&b, &plane, x2, t2);
        assert!((sum - parts).norm() < 1e-14 * sum.norm());

        let unrotated = BeamStateAtPlane { gouy: 0.0, ..plane };
        let rotated = scatter_to_hg10(&b, &unrotated, x1, t1) * Complex64::from_polar(1.0, -plane.gouy);
        assert!((rotated - scatter_to_hg10(&b, &plane, x1, t1)).norm() < 1e-14 * rotated.norm());
    }

    #[test]
    fn split_detector_coefficients_sum_to_half_pi() {
        assert_eq!(split_detector_coefficient(0), 1.0);
        // D_1 = -(1/3)·√(3!/4).
        assert!((split_detector_coefficient(1) + (6.0f64 / 4.0).sqrt() / 3.0).abs() < 1e-15);
        // The partial sums approach π/2 like 1/√K; compare with a tail estimate.
        let k_max = 200_000u32;
        let (mut c, mut partial) = (1.0f64, 0.0f64);
        for k in 0..k_max {
            if k > 0 {
                c *= (2 * k - 1) as f64 / (2 * k) as f64;
            }
            partial += c / (2 * k + 1) as f64;
        }
        for k in [2u32, 17, 400] {
            let mut ck = 1.0;
            for j in 1..=k {
                ck *= (2 * j - 1) as f64 / (2 * j) as f64;
            }
            assert!((split_detector_coefficient(k).powi(2) - ck / (2 * k + 1) as f64).abs() < 1e-15);
        }
        let tail = 1.0 / (PI * k_max as f64).sqrt();
        assert!((partial + tail - FRAC_PI_2).abs() < 1e-6, "{}", partial + tail);
    }

    #[test]
    fn derived_beam_quantities() {
        let b = beam();
        assert!((b.wavenumber() - 5.905_249_348_852_994e6).abs() < 1.0);
        assert!((b.photon_flux() - 5e-3 / (HBAR * TWO_PI * C / 1064e-9)).abs() < 1.0);
        assert!(BeamParams::new(1064e-9, 1e-3, 1e-3, 1.2, 0.0).is_err());
        assert!(BeamParams::new(1064e-9, 1e-3, 0.0, 0.5, 0.0).is_err());
    }
}
