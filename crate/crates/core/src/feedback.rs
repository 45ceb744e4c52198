//! Measurement-based feedback cooling (cold damping).
//!
//! The loop applies `δτ_fb = L[Ω]·δθ_obs` with `L = −χ_fb⁻¹`. For the
//! ideal derivative filter `L = iIΩΓ_fb`, which adds `Γ_fb` to the damping
//! without adding thermal torque. The imprecision noise rides along in the
//! loop and is fed back onto the oscillator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::error::{require_non_negative, Error, Result};
use crate::mech::{self, OccupancyModel, OscillatorParams};
use crate::readout::{self, OpticalLever};
use crate::spectrum::{FrequencyGrid, Profile, SpectralUnit, Spectrum};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopModel {
    #[default]
    IdealDerivative,
    /// Second-order bandpass with its gain and phase pinned to the ideal
    /// filter at resonance, plus an optional extra delay.
    BandpassWithDelay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackConfig {
    /// Feedback damping rate Γ_fb, rad/s.
    pub gamma_fb: f64,
    pub model: LoopModel,
    /// Bandpass lower edge, Hz.
    pub band_low: f64,
    /// Bandpass upper edge, Hz.
    pub band_high: f64,
    /// Loop delay beyond the one compensated at resonance, s.
    pub extra_delay: f64,
    /// Additional torque noise injected by the loop electronics, N²·m²/Hz.
    pub extra_torque_psd: Option<Profile>,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self {
            gamma_fb: 0.0,
            model: LoopModel::IdealDerivative,
            band_low: 34e3,
            band_high: 40e3,
            extra_delay: 0.0,
            extra_torque_psd: None,
        }
    }
}

impl FeedbackConfig {
    pub fn ideal(gamma_fb: f64) -> Self {
        Self { gamma_fb, ..Self::default() }
    }

    pub fn open_loop() -> Self {
        Self::ideal(0.0)
    }

    pub fn with_gamma_fb(&self, gamma_fb: f64) -> Self {
        Self { gamma_fb, ..self.clone() }
    }

    pub fn validate(&self, osc: &OscillatorParams) -> Result<()> {
        require_non_negative("gamma_fb", self.gamma_fb)?;
        require_non_negative("extra_delay", self.extra_delay)?;
        if let Some(p) = &self.extra_torque_psd {
            p.validate("extra_torque_psd", 0.0, f64::INFINITY)?;
        }
        if self.model == LoopModel::BandpassWithDelay {
            let f0 = osc.frequency_hz();
            if !(self.band_low > 0.0 && self.band_low < f0 && f0 < self.band_high && self.band_high.is_finite()) {
                return Err(Error::Domain(format!(
                    "bandpass edges must bracket the resonance: {} < {f0} < {} Hz",
                    self.band_low, self.band_high
                )));
            }
        }
        Ok(())
    }

    fn extra_torque(&self, freq: f64) -> f64 {
        self.extra_torque_psd.as_ref().map_or(0.0, |p| p.value_at(freq))
    }
}

/// Bandpass response at angular frequency `omega` under the `e^{−iΩt}` convention.
fn bandpass(fb: &FeedbackConfig, omega: f64) -> Complex64 {
    let wc = TWO_PI * (fb.band_low * fb.band_high).sqrt();
    let bw = TWO_PI * (fb.band_high - fb.band_low);
    let s = Complex64::new(0.0, -omega);
    bw * s / (s * s + bw * s + wc * wc)
}

/// Loop filter `L[Ω] = −χ_fb⁻¹[Ω]` at `freq` Hz, N·m/rad.
pub fn loop_filter(fb: &FeedbackConfig, osc: &OscillatorParams, freq: f64) -> Result<Complex64> {
    if !(freq.is_finite() && freq > 0.0) {
        return Err(Error::Domain(format!("frequency must be > 0 Hz (got {freq})")));
    }
    Ok(loop_filter_at(fb, osc, TWO_PI * freq))
}

pub(crate) fn loop_filter_at(fb: &FeedbackConfig, osc: &OscillatorParams, omega: f64) -> Complex64 {
    let ideal = Complex64::new(0.0, osc.inertia * omega * fb.gamma_fb);
    match fb.model {
        LoopModel::IdealDerivative => ideal,
        LoopModel::BandpassWithDelay => {
            let h = bandpass(fb, omega) / bandpass(fb, osc.omega0);
            let delay = Complex64::from_polar(1.0, (omega - osc.omega0) * fb.extra_delay);
            ideal * h * delay
        }
    }
}

/// `χ_eff = (χ0⁻¹ − L)⁻¹` at `freq` Hz.
pub fn effective_susceptibility(osc: &OscillatorParams, fb: &FeedbackConfig, freq: f64) -> Result<Complex64> {
    let l = loop_filter(fb, osc, freq)?;
    Ok((osc.inverse_susceptibility_at(TWO_PI * freq) - l).inv())
}

/// Transfer functions and noise inputs of the closed loop at one frequency.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LoopPoint {
    pub chi_eff: Complex64,
    pub filter: Complex64,
    pub chi0_inv: Complex64,
    pub torque: f64,
    pub imprecision: f64,
}

impl LoopPoint {
    pub fn physical(&self) -> f64 {
        self.chi_eff.norm_sqr() * self.torque + (self.chi_eff * self.filter).norm_sqr() * self.imprecision
    }

    pub fn observed(&self) -> f64 {
        self.chi_eff.norm_sqr() * self.torque + (self.chi_eff * self.chi0_inv).norm_sqr() * self.imprecision
    }
}

pub(crate) fn loop_point(osc: &OscillatorParams, lever: &OpticalLever, fb: &FeedbackConfig, freq: f64) -> Result<LoopPoint> {
    let omega = TWO_PI * freq;
    let filter = loop_filter(fb, osc, freq)?;
    let chi0_inv = osc.inverse_susceptibility_at(omega);
    let torque = mech::thermal_torque_density(osc, freq)? + lever.backaction_at(freq) + fb.extra_torque(freq);
    Ok(LoopPoint {
        chi_eff: (chi0_inv - filter).inv(),
        filter,
        chi0_inv,
        torque,
        imprecision: lever.imprecision_at(freq)?,
    })
}

fn closed_loop(
    osc: &OscillatorParams,
    lever: &OpticalLever,
    fb: &FeedbackConfig,
    grid: &FrequencyGrid,
    pick: impl Fn(&LoopPoint) -> f64,
) -> Result<Spectrum> {
    osc.validate()?;
    lever.validate()?;
    fb.validate(osc)?;
    let values = grid
        .iter()
        .map(|f| loop_point(osc, lever, fb, f).map(|p| pick(&p)))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(grid.clone(), values, SpectralUnit::Angle)
}

/// In-loop (observed) angle PSD `|χ_eff|² S_τ^tot + |χ_eff χ0⁻¹|² S_imp`.
pub fn closed_loop_observed_psd(
    osc: &OscillatorParams,
    lever: &OpticalLever,
    fb: &FeedbackConfig,
    grid: &FrequencyGrid,
) -> Result<Spectrum> {
    closed_loop(osc, lever, fb, grid, LoopPoint::observed)
}

/// Physical (out-of-loop) angle PSD `|χ_eff|² S_τ^tot + |χ_eff L|² S_imp`.
pub fn closed_loop_physical_psd(
    osc: &OscillatorParams,
    lever: &OpticalLever,
    fb: &FeedbackConfig,
    grid: &FrequencyGrid,
) -> Result<Spectrum> {
    closed_loop(osc, lever, fb, grid, LoopPoint::physical)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bookkeeping {
    /// Keeps the zero-point ½ and the back-action occupancy.
    #[default]
    Exact,
    /// `n_eff ≈ n_th Γ0/Γ_eff + n_imp Γ_eff/Γ0`.
    Simplified,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OccupancyOptions {
    /// Line center, Hz. Estimated from the spectrum when absent.
    pub center: Option<f64>,
    /// Half-width at half-maximum, Hz. Estimated when absent.
    pub hwhm: Option<f64>,
    pub bookkeeping: Bookkeeping,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyEstimate {
    pub n_eff: f64,
    /// Variance inside the grid, rad².
    pub in_band_variance: f64,
    /// Lorentzian extrapolation beyond the grid edges, rad².
    pub tail_variance: f64,
    /// More than 20% of the variance came from the tail extrapolation, or
    /// the line width could not be found.
    pub tail_dominated: bool,
    /// Raw estimate was negative and has been clamped to zero.
    pub degenerate: bool,
}

const TAIL_DOMINATED_FRACTION: f64 = 0.2;

/// Phonon occupancy `∫S df / 2θ_zp² − ½` of a physical angle spectrum,
/// with the Lorentzian tails beyond the grid added analytically.
pub fn occupancy_from_spectrum(phys: &Spectrum, theta_zp: f64, options: OccupancyOptions) -> Result<OccupancyEstimate> {
    if !(theta_zp.is_finite() && theta_zp > 0.0) {
        return Err(Error::Domain(format!("theta_zp must be > 0 (got {theta_zp})")));
    }
    if phys.len() < 3 {
        return Err(Error::Domain("occupancy needs at least 3 spectral points".into()));
    }
    let in_band = phys.integrate();
    let shape = line_shape(phys, options);
    let tail = shape.map_or(0.0, |(center, hwhm)| lorentzian_tails(phys, center, hwhm));
    let total = in_band + tail;
    let half = match options.bookkeeping {
        Bookkeeping::Exact => 0.5,
        Bookkeeping::Simplified => 0.0,
    };
    let raw = total / (2.0 * theta_zp * theta_zp) - half;
    let degenerate = raw < 0.0 || total == 0.0;
    // An unresolved line cannot be extrapolated, which is just as bad.
    let tail_dominated = total > 0.0 && (shape.is_none() || tail > TAIL_DOMINATED_FRACTION * total);
    if tail_dominated {
        log::warn!(
            "occupancy: {:.0}% of the variance is extrapolated beyond [{}, {}] Hz",
            100.0 * tail / total,
            phys.grid().first(),
            phys.grid().last()
        );
    }
    Ok(OccupancyEstimate {
        n_eff: raw.max(0.0),
        in_band_variance: in_band,
        tail_variance: tail,
        tail_dominated,
        degenerate,
    })
}

fn line_shape(phys: &Spectrum, options: OccupancyOptions) -> Option<(f64, f64)> {
    let (freqs, values) = (phys.freqs(), phys.values());
    let (i_max, &peak) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if peak <= 0.0 {
        return None;
    }
    let center = options.center.unwrap_or(freqs[i_max]);
    let hwhm = options.hwhm.or_else(|| {
        // Half-maximum crossings on either side of the peak.
        let half = 0.5 * peak;
        let lo = (0..i_max).rev().find(|&i| values[i] < half);
        let hi = (i_max + 1..values.len()).find(|&i| values[i] < half);
        let cross = |i: usize, j: usize| {
            let t = (half - values[i]) / (values[j] - values[i]);
            freqs[i] + t * (freqs[j] - freqs[i])
        };
        match (lo, hi) {
            (Some(l), Some(h)) => Some(0.5 * (cross(h, h - 1) - cross(l, l + 1))),
            (Some(l), None) => Some(center - cross(l, l + 1)),
            (None, Some(h)) => Some(cross(h, h - 1) - center),
            (None, None) => None,
        }
    })?;
    (hwhm > 0.0 && hwhm.is_finite()).then_some((center, hwhm))
}

/// `∫` beyond each grid edge of a Lorentzian through the edge value.
fn lorentzian_tails(phys: &Spectrum, center: f64, hwhm: f64) -> f64 {
    let tail = |f_edge: f64, s_edge: f64| {
        let u = (f_edge - center).abs() / hwhm;
        s_edge * (1.0 + u * u) * hwhm * (std::f64::consts::FRAC_PI_2 - u.atan())
    };
    let values = phys.values();
    let mut total = 0.0;
    if phys.grid().last() > center {
        total += tail(phys.grid().last(), values[values.len() - 1]);
    }
    if phys.grid().first() < center {
        // Stop at 0 Hz rather than −∞.
        let f = phys.grid().first();
        let u_lo = (center - f) / hwhm;
        let s_edge = values[0];
        total += s_edge * (1.0 + u_lo * u_lo) * hwhm * ((center / hwhm).atan() - u_lo.atan());
    }
    total
}

/// Occupancy inputs of the closed-form cooling model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingInputs {
    pub n_th: f64,
    pub n_ba: f64,
    pub n_imp: f64,
    /// Intrinsic damping Γ0, rad/s.
    pub gamma0: f64,
}

impl CoolingInputs {
    /// Occupancies of the given oscillator and probe, evaluated at resonance.
    pub fn from_model(osc: &OscillatorParams, lever: &OpticalLever) -> Result<Self> {
        osc.validate()?;
        lever.validate()?;
        let f0 = osc.frequency_hz();
        Ok(Self {
            n_th: mech::thermal_occupancy(osc.temperature, f0, OccupancyModel::Exact)?,
            n_ba: readout::backaction_occupancy(osc, lever.backaction_at(f0)),
            n_imp: readout::imprecision_occupancy(osc, lever.imprecision_at(f0)?),
            gamma0: osc.gamma0(),
        })
    }

    /// Damping rate that minimizes the occupancy.
    pub fn optimal_gamma_eff(&self, bookkeeping: Bookkeeping) -> f64 {
        let heat = match bookkeeping {
            Bookkeeping::Exact => self.n_th + self.n_ba + 0.5,
            Bookkeeping::Simplified => self.n_th,
        };
        (self.gamma0 * (heat / self.n_imp).sqrt()).max(self.gamma0)
    }

    pub fn optimum(&self, bookkeeping: Bookkeeping) -> Result<CoolingPoint> {
        cooling_point(self, self.optimal_gamma_eff(bookkeeping), bookkeeping)
    }
}

/// One point of a cooling curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingPoint {
    pub gamma_fb: f64,
    pub gamma_eff: f64,
    pub n_eff: f64,
    /// `(n_th + ½)Γ0/Γ_eff` (without the ½ in the simplified form).
    pub n_thermal_term: f64,
    /// `n_imp Γ_eff/Γ0`.
    pub n_imprecision_term: f64,
    /// `n_ba Γ0/Γ_eff`.
    pub n_backaction_term: f64,
    pub tail_dominated: bool,
}

/// `n_eff + ½ = (n_th + n_ba + ½) Γ0/Γ_eff + n_imp Γ_eff/Γ0`.
pub fn occupancy_closed_form(n_th: f64, n_ba: f64, n_imp: f64, gamma0: f64, gamma_eff: f64) -> Result<f64> {
    let inputs = CoolingInputs { n_th, n_ba, n_imp, gamma0 };
    Ok(cooling_point(&inputs, gamma_eff, Bookkeeping::Exact)?.n_eff)
}

/// Closed-form cooling point at the given effective damping.
pub fn cooling_point(inputs: &CoolingInputs, gamma_eff: f64, bookkeeping: Bookkeeping) -> Result<CoolingPoint> {
    require_non_negative("n_th", inputs.n_th)?;
    require_non_negative("n_ba", inputs.n_ba)?;
    require_non_negative("n_imp", inputs.n_imp)?;
    let g0 = inputs.gamma0;
    if !(g0.is_finite() && g0 > 0.0 && gamma_eff.is_finite() && gamma_eff >= g0) {
        return Err(Error::Domain(format!("need gamma_eff >= gamma0 > 0 (got {gamma_eff}, {g0})")));
    }
    let ratio = g0 / gamma_eff;
    let (thermal, backaction, half) = match bookkeeping {
        Bookkeeping::Exact => ((inputs.n_th + 0.5) * ratio, inputs.n_ba * ratio, 0.5),
        Bookkeeping::Simplified => (inputs.n_th * ratio, 0.0, 0.0),
    };
    let imprecision = inputs.n_imp / ratio;
    Ok(CoolingPoint {
        gamma_fb: gamma_eff - g0,
        gamma_eff,
        n_eff: thermal + backaction + imprecision - half,
        n_thermal_term: thermal,
        n_imprecision_term: imprecision,
        n_backaction_term: backaction,
        tail_dominated: false,
    })
}

/// Half-width of the occupancy integration window, rad/s: 50 linewidths,
/// capped at 0.2 Ω0. Beyond that cap the 1/Ω structural torque tail makes the
/// physical spectrum of a heavily damped mode visibly non-Lorentzian, and the
/// analytic tail correction is the better estimate.
pub fn integration_half_window(omega0: f64, gamma_eff: f64) -> f64 {
    (50.0 * gamma_eff).min(0.2 * omega0)
}

/// Points in the resonant grid used by [`gain_sweep`].
pub const SWEEP_GRID_POINTS: usize = 4001;

/// Resonant grid around the closed-loop line with effective damping `gamma_eff`.
pub fn cooling_grid(osc: &OscillatorParams, gamma_eff: f64, points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::resonant(
        osc.frequency_hz(),
        gamma_eff / (2.0 * TWO_PI),
        integration_half_window(osc.omega0, gamma_eff) / TWO_PI,
        points,
    )
}

/// Occupancy at each feedback gain, from integrating the physical closed-loop
/// spectrum. The term breakdown comes from the closed form. Gains are
/// evaluated in parallel; output order follows `gains`.
pub fn gain_sweep(
    osc: &OscillatorParams,
    lever: &OpticalLever,
    template: &FeedbackConfig,
    gains: &[f64],
    bookkeeping: Bookkeeping,
) -> Result<Vec<CoolingPoint>> {
    if gains.is_empty() {
        return Err(Error::Domain("gain sweep needs at least one gain".into()));
    }
    let inputs = CoolingInputs::from_model(osc, lever)?;
    let theta_zp = osc.theta_zp();
    gains
        .par_iter()
        .map(|&gamma_fb| {
            let fb = template.with_gamma_fb(gamma_fb);
            let gamma_eff = inputs.gamma0 + gamma_fb;
            let grid = cooling_grid(osc, gamma_eff, SWEEP_GRID_POINTS)?;
            let phys = closed_loop_physical_psd(osc, lever, &fb, &grid)?;
            let options = OccupancyOptions {
                center: Some(osc.frequency_hz()),
                hwhm: Some(gamma_eff / (2.0 * TWO_PI)),
                bookkeeping,
            };
            let est = occupancy_from_spectrum(&phys, theta_zp, options)?;
            let mut point = cooling_point(&inputs, gamma_eff, bookkeeping)?;
            point.gamma_fb = gamma_fb;
            point.n_eff = est.n_eff;
            point.tail_dominated = est.tail_dominated;
            Ok(point)
        })
        .collect()
}

/// `n_eff ≥ 2√(n_th n_imp)`, the imprecision-limited floor of cold damping.
pub fn cooling_limit(n_th: f64, n_imp: f64) -> f64 {
    2.0 * (n_th * n_imp).sqrt()
}

/// Gain above which the in-loop spectrum dips below the imprecision floor on
/// resonance, `Γ0 √(S_peak / S_imp)`.
pub fn squashing_threshold(osc: &OscillatorParams, lever: &OpticalLever) -> Result<f64> {
    let f0 = osc.frequency_hz();
    let peak = mech::intrinsic_spectrum(osc, &FrequencyGrid::new(vec![f0])?)?.values()[0];
    Ok(osc.gamma0() * (peak / lever.imprecision_at(f0)?).sqrt())
}
