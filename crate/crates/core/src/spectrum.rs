//! Frequency grids and one-sided power spectral densities.
//!
//! Every spectrum in the crate is a one-sided, symmetrized PSD sampled on a
//! strictly positive, strictly increasing grid in Hz, normalized so that the
//! variance of the underlying signal is `∫ S(f) df` over `(0, ∞)`. Formulas
//! written in angular frequency are evaluated at `Ω = 2πf`; since
//! `dΩ/2π = df`, no further factor appears anywhere else.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid(Vec<f64>);

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;

    fn try_from(freqs: Vec<f64>) -> Result<Self> {
        Self::new(freqs)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(grid: FrequencyGrid) -> Self {
        grid.0
    }
}

impl FrequencyGrid {
    /// Validates that `freqs` is non-empty, finite, strictly positive and
    /// strictly increasing.
    pub fn new(freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() {
            return domain("frequency grid is empty");
        }
        if let Some(&f) = freqs.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return domain(format!("frequency grid must be strictly positive (found {f})"));
        }
        if let Some(w) = freqs.windows(2).find(|w| w[1] <= w[0]) {
            return domain(format!(
                "frequency grid must be strictly increasing ({} followed by {})",
                w[0], w[1]
            ));
        }
        Ok(Self(freqs))
    }

    pub fn linear(f_min: f64, f_max: f64, points: usize) -> Result<Self> {
        check_span(f_min, f_max, points)?;
        let step = (f_max - f_min) / (points - 1) as f64;
        Self::new((0..points).map(|i| f_min + step * i as f64).collect())
    }

    pub fn log(f_min: f64, f_max: f64, points: usize) -> Result<Self> {
        check_span(f_min, f_max, points)?;
        let (a, b) = (f_min.ln(), f_max.ln());
        let step = (b - a) / (points - 1) as f64;
        let mut freqs: Vec<f64> = (0..points).map(|i| (a + step * i as f64).exp()).collect();
        freqs[0] = f_min;
        freqs[points - 1] = f_max;
        Self::new(freqs)
    }

    /// Grid concentrated around a Lorentzian line at `center` with
    /// half-width at half-maximum `hwhm`, covering `center ± half_window`.
    ///
    /// Points are spaced uniformly in `atan((f - center)/hwhm)`, which puts an
    /// equal share of the line's area between consecutive points. The low
    /// edge is clipped to `center * 1e-4` when the window would reach zero.
    pub fn resonant(center: f64, hwhm: f64, half_window: f64, points: usize) -> Result<Self> {
        for (name, v) in [("center", center), ("hwhm", hwhm), ("half_window", half_window)] {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("resonant grid: {name} must be > 0 (got {v})"));
            }
        }
        if points < 3 {
            return domain("resonant grid needs at least 3 points");
        }
        let low = half_window.min(center * (1.0 - 1e-4));
        let phi_lo = (-low / hwhm).atan();
        let phi_hi = (half_window / hwhm).atan();
        let step = (phi_hi - phi_lo) / (points - 1) as f64;
        let mut freqs: Vec<f64> = (0..points)
            .map(|i| center + hwhm * (phi_lo + step * i as f64).tan())
            .collect();
        freqs[0] = center - low;
        freqs[points - 1] = center + half_window;
        freqs.dedup_by(|a, b| *a <= *b);
        Self::new(freqs)
    }

    /// Log grid over `[f_min, f_max]` merged with a linear grid of
    /// `refine_points` over `center ± refine_half_width`.
    pub fn log_refined(
        f_min: f64,
        f_max: f64,
        points: usize,
        center: f64,
        refine_half_width: f64,
        refine_points: usize,
    ) -> Result<Self> {
        let base = Self::log(f_min, f_max, points)?;
        let lo = (center - refine_half_width).max(f_min);
        let hi = (center + refine_half_width).min(f_max);
        if refine_points < 2 || hi <= lo {
            return Ok(base);
        }
        let fine = Self::linear(lo, hi, refine_points)?;
        let mut all: Vec<f64> = base.0.into_iter().chain(fine.0).collect();
        all.sort_by(f64::total_cmp);
        // Drop points closer than a relative 1e-12 so the grid stays strictly increasing.
        all.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        Self::new(all)
    }

    /// Positive FFT bin frequencies `k·fs/n` for `k = 1..=n/2`.
    pub fn fft_bins(n: usize, sample_rate: f64) -> Result<Self> {
        if n < 2 {
            return domain("FFT grid needs at least 2 samples");
        }
        let df = sample_rate / n as f64;
        Self::new((1..=n / 2).map(|k| k as f64 * df).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

fn check_span(f_min: f64, f_max: f64, points: usize) -> Result<()> {
    if points < 2 {
        return domain(format!("grid needs at least 2 points (got {points})"));
    }
    if !(f_min.is_finite() && f_min > 0.0 && f_max.is_finite() && f_max > f_min) {
        return domain(format!("grid span must satisfy 0 < f_min < f_max (got {f_min}, {f_max})"));
    }
    Ok(())
}

/// Physical unit of a PSD (per Hz).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralUnit {
    /// rad²/Hz
    Angle,
    /// m²/Hz
    Displacement,
    /// N²/Hz
    Force,
    /// N²·m²/Hz
    Torque,
    /// A²/Hz
    Current,
    /// V²/Hz
    Voltage,
    Dimensionless,
}

impl SpectralUnit {
    pub fn label(self) -> &'static str {
        match self {
            Self::Angle => "rad^2/Hz",
            Self::Displacement => "m^2/Hz",
            Self::Force => "N^2/Hz",
            Self::Torque => "N^2 m^2/Hz",
            Self::Current => "A^2/Hz",
            Self::Voltage => "V^2/Hz",
            Self::Dimensionless => "1",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    grid: FrequencyGrid,
    values: Vec<f64>,
    unit: SpectralUnit,
    /// Number of averaged periodograms behind an estimated spectrum; `None`
    /// for model spectra.
    #[serde(default)]
    averages: Option<usize>,
}

impl Spectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>, unit: SpectralUnit) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return domain(format!(
                "spectral density must be finite and >= 0 (value {v} at {} Hz)",
                grid.as_slice()[i]
            ));
        }
        Ok(Self { grid, values, unit, averages: None })
    }

    pub fn from_fn(grid: &FrequencyGrid, unit: SpectralUnit, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(f).collect();
        Self::new(grid.clone(), values, unit)
    }

    pub fn zeros(grid: &FrequencyGrid, unit: SpectralUnit) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()], unit, averages: None }
    }

    pub fn with_averages(mut self, averages: usize) -> Self {
        self.averages = Some(averages);
        self
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn freqs(&self) -> &[f64] {
        self.grid.as_slice()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> SpectralUnit {
        self.unit
    }

    pub fn averages(&self) -> Option<usize> {
        self.averages
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().zip(self.values.iter().copied())
    }

    /// Linear interpolation; held constant beyond the grid edges.
    pub fn value_at(&self, f: f64) -> f64 {
        let x = self.freqs();
        let n = x.len();
        if f <= x[0] {
            return self.values[0];
        }
        if f >= x[n - 1] {
            return self.values[n - 1];
        }
        let i = x.partition_point(|&xi| xi <= f);
        let (x0, x1) = (x[i - 1], x[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (y1 - y0) * (f - x0) / (x1 - x0)
    }

    /// Trapezoidal `∫ S df` over the grid.
    pub fn integrate(&self) -> f64 {
        trapezoid(self.freqs(), &self.values)
    }

    /// Multiplies every value by `factor` and relabels the unit.
    pub fn scaled(&self, factor: f64, unit: SpectralUnit) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        let mut out = Self::new(self.grid.clone(), values, unit)?;
        out.averages = self.averages;
        Ok(out)
    }

    /// Sub-spectrum on `[f_lo, f_hi]`.
    pub fn restrict(&self, f_lo: f64, f_hi: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.freqs()[i] >= f_lo && self.freqs()[i] <= f_hi)
            .collect();
        let grid = FrequencyGrid::new(keep.iter().map(|&i| self.freqs()[i]).collect())?;
        let values = keep.iter().map(|&i| self.values[i]).collect();
        let mut out = Self::new(grid, values, self.unit)?;
        out.averages = self.averages;
        Ok(out)
    }

    /// Pointwise sum; the grids and units must match.
    pub fn add(&self, other: &Spectrum) -> Result<Self> {
        self.require_same_grid(other)?;
        if self.unit != other.unit {
            return Err(Error::GridMismatch(format!(
                "cannot add {} to {}",
                other.unit.label(),
                self.unit.label()
            )));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self::new(self.grid.clone(), values, self.unit)
    }

    pub fn require_same_grid(&self, other: &Spectrum) -> Result<()> {
        require_grid(&self.grid, other.grid())
    }
}

pub(crate) fn require_grid(expected: &FrequencyGrid, actual: &FrequencyGrid) -> Result<()> {
    if expected != actual {
        return Err(Error::GridMismatch(format!(
            "expected a {}-point grid over [{}, {}] Hz, got {} points over [{}, {}] Hz",
            expected.len(),
            expected.first(),
            expected.last(),
            actual.len(),
            actual.first(),
            actual.last()
        )));
    }
    Ok(())
}

/// A frequency-dependent input that may be a single level or a tabulated
/// spectrum (interpolated linearly, held at the edges).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Tabulated(Spectrum),
}

impl Default for Profile {
    fn default() -> Self {
        Self::Constant(0.0)
    }
}

impl From<f64> for Profile {
    fn from(v: f64) -> Self {
        Self::Constant(v)
    }
}

impl Profile {
    pub fn value_at(&self, f: f64) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Tabulated(s) => s.value_at(f),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(v) => *v == 0.0,
            Self::Tabulated(s) => s.values().iter().all(|&v| v == 0.0),
        }
    }

    /// Checks that every level lies in `[lo, hi]`.
    pub(crate) fn validate(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= lo && v <= hi;
        let bad = match self {
            Self::Constant(v) => (!ok(*v)).then_some(*v),
            Self::Tabulated(s) => s.values().iter().copied().find(|v| !ok(*v)),
        };
        match bad {
            Some(v) => domain(format!("{name} must lie in [{lo}, {hi}] (got {v})")),
            None => Ok(()),
        }
    }
}

/// Trapezoidal rule on a (not necessarily uniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(FrequencyGrid::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![2.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, f64::NAN]).is_err());
        assert!(FrequencyGrid::log(0.0, 1.0, 10).is_err());
        assert!(FrequencyGrid::linear(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let g = FrequencyGrid::log(1.0, 1e5, 11).unwrap();
        assert_eq!(g.first(), 1.0);
        assert_eq!(g.last(), 1e5);
        assert!((g.as_slice()[1] - 10f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn resonant_grid_is_dense_at_center_and_clips_low_edge() {
        let g = FrequencyGrid::resonant(1000.0, 1.0, 50.0, 2001).unwrap();
        assert!((g.first() - 950.0).abs() < 1e-9 && (g.last() - 1050.0).abs() < 1e-9);
        let near = g.iter().filter(|f| (f - 1000.0).abs() < 1.0).count();
        assert!(near > 900, "only {near} points inside the HWHM");

        let clipped = FrequencyGrid::resonant(1000.0, 100.0, 5000.0, 501).unwrap();
        assert!(clipped.first() > 0.0 && clipped.first() < 1.0);
    }

    #[test]
    fn refined_grid_is_strictly_increasing() {
        let g = FrequencyGrid::log_refined(1.0, 1e5, 400, 35_950.0, 10.0, 201).unwrap();
        assert!(g.len() > 590);
        assert!(g.as_slice().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = FrequencyGrid::log(1.0, 10.0, 7).unwrap();
        let s = Spectrum::from_fn(&g, SpectralUnit::Angle, |f| 2.0 * f).unwrap();
        assert!((s.integrate() - 99.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_and_edge_hold() {
        let g = FrequencyGrid::new(vec![1.0, 2.0, 4.0]).unwrap();
        let s = Spectrum::new(g, vec![1.0, 3.0, 7.0], SpectralUnit::Angle).unwrap();
        assert_eq!(s.value_at(0.5), 1.0);
        assert_eq!(s.value_at(1.5), 2.0);
        assert_eq!(s.value_at(3.0), 5.0);
        assert_eq!(s.value_at(9.0), 7.0);
    }

    #[test]
    fn negative_density_rejected() {
        let g = FrequencyGrid::new(vec![1.0, 2.0]).unwrap();
        assert!(Spectrum::new(g.clone(), vec![1.0, -1e-30], SpectralUnit::Angle).is_err());
        assert!(Spectrum::new(g, vec![1.0], SpectralUnit::Angle).is_err());
    }

    #[test]
    fn profile_deserializes_from_number() {
        let p: Profile = serde_json::from_str("1.5e-20").unwrap();
        assert_eq!(p, Profile::Constant(1.5e-20));
    }
}
