use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sim::{SeriesUnit, TimeSeries};
use crate::spectrum::{FrequencyGrid, SpectralUnit, Spectrum};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Window {
    /// Periodic Hann window.
    #[default]
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Self::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchParams {
    pub segment_length: usize,
    /// Fraction of a segment shared with the next, in [0, 0.9].
    pub overlap: f64,
    pub window: Window,
}

impl WelchParams {
    pub fn new(segment_length: usize, overlap: f64) -> Self {
        Self { segment_length, overlap, window: Window::Hann }
    }

    fn step(&self) -> usize {
        ((self.segment_length as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    /// Number of segments that fit in `len` samples.
    pub fn segment_count(&self, len: usize) -> usize {
        if len < self.segment_length {
            0
        } else {
            (len - self.segment_length) / self.step() + 1
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        if self.segment_length < 4 {
            return Err(Error::Domain("Welch segments need at least 4 samples".into()));
        }
        if !(0.0..=0.9).contains(&self.overlap) {
            return Err(Error::Domain(format!("overlap must be in [0, 0.9] (got {})", self.overlap)));
        }
        if len < self.segment_length {
            return Err(Error::Domain(format!("record of {len} samples is shorter than one {}-sample segment", self.segment_length)));
        }
        Ok(())
    }
}

pub(crate) fn spectral_unit(unit: SeriesUnit) -> SpectralUnit {
    match unit {
        SeriesUnit::Rad => SpectralUnit::Angle,
        SeriesUnit::Volt => SpectralUnit::Voltage,
        SeriesUnit::Ampere => SpectralUnit::Current,
        SeriesUnit::Metre => SpectralUnit::Displacement,
        SeriesUnit::Newton => SpectralUnit::Force,
        SeriesUnit::NewtonMetre => SpectralUnit::Torque,
        SeriesUnit::Dimensionless => SpectralUnit::Dimensionless,
    }
}

/// Windowed, mean-removed FFT of every segment, bins `1..=L/2`.
pub(crate) fn segment_spectra(ts: &TimeSeries, params: &WelchParams) -> Result<Vec<Vec<Complex64>>> {
    params.validate(ts.len())?;
    let l = params.segment_length;
    let window = params.window.coefficients(l);
    let fft = FftPlanner::new().plan_fft_forward(l);
    let x = ts.samples();
    let step = params.step();
    Ok((0..params.segment_count(x.len()))
        .map(|s| {
            let seg = &x[s * step..s * step + l];
            let mean = seg.iter().sum::<f64>() / l as f64;
            let mut buf: Vec<Complex64> = seg
                .iter()
                .zip(&window)
                .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
                .collect();
            fft.process(&mut buf);
            buf.truncate(l / 2 + 1);
            buf.remove(0);
            buf
        })
        .collect())
}

/// Averaged one-sided periodogram. The DC bin is dropped; the spectrum
/// records the number of averaged segments. Every bin, Nyquist included,
/// is an unbiased estimate of the one-sided density, so the trapezoid
/// integral plus half the first bin reproduces the variance.
pub fn welch_psd(ts: &TimeSeries, params: &WelchParams) -> Result<Spectrum> {
    let segs = segment_spectra(ts, params)?;
    let l = params.segment_length;
    let fs = ts.sample_rate();
    let power: f64 = params.window.coefficients(l).iter().map(|w| w * w).sum();
    let count = segs.len() as f64;
    let values = (0..l / 2)
        .map(|i| {
            // The Nyquist bin is doubled too, so white noise reads flat.
            let sum: f64 = segs.iter().map(|s| s[i].norm_sqr()).sum();
            2.0 * sum / (count * fs * power)
        })
        .collect();
    Ok(Spectrum::new(FrequencyGrid::fft_bins(l, fs)?, values, spectral_unit(ts.unit()))?.with_averages(segs.len()))
}

/// Magnitude-squared coherence `|P_ab|² / (P_aa P_bb)` from averaged cross-spectra.
pub fn coherence(a: &TimeSeries, b: &TimeSeries, params: &WelchParams) -> Result<Spectrum> {
    if a.len() != b.len() || a.sample_rate() != b.sample_rate() {
        return Err(Error::Domain("coherence needs records of equal length and sample rate".into()));
    }
    let sa = segment_spectra(a, params)?;
    let sb = segment_spectra(b, params)?;
    if sa.len() < 2 {
        return Err(Error::Domain("coherence of a single segment is identically 1".into()));
    }
    let bins = params.segment_length / 2;
    let values = (0..bins)
        .map(|i| {
            let mut pab = Complex64::new(0.0, 0.0);
            let (mut paa, mut pbb) = (0.0, 0.0);
            for (x, y) in sa.iter().zip(&sb) {
                pab += x[i].conj() * y[i];
                paa += x[i].norm_sqr();
                pbb += y[i].norm_sqr();
            }
            let denom = paa * pbb;
            if denom > 0.0 {
                (pab.norm_sqr() / denom).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(Spectrum::new(FrequencyGrid::fft_bins(params.segment_length, a.sample_rate())?, values, SpectralUnit::Dimensionless)?
        .with_averages(sa.len()))
}
