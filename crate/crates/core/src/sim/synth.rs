use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use super::timeseries::{SeriesUnit, TimeSeries};
use crate::error::{Error, Result};
use crate::spectrum::{SpectralUnit, Spectrum};

/// Name recorded in the metadata of every synthesized record.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng (seed_from_u64, per-signal stream)";

/// Independent stream `stream` of the generator seeded by `seed`.
pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) fn record_length(duration: f64, sample_rate: f64) -> Result<usize> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::Domain(format!("sample_rate must be > 0 (got {sample_rate})")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Domain(format!("duration must be > 0 (got {duration})")));
    }
    let n = (duration * sample_rate).round();
    if n < 2.0 || n > 1e10 {
        return Err(Error::Domain(format!("duration × sample_rate = {n} samples; need at least 2")));
    }
    Ok(n as usize)
}

pub(crate) fn series_unit(unit: SpectralUnit) -> SeriesUnit {
    match unit {
        SpectralUnit::Angle => SeriesUnit::Rad,
        SpectralUnit::Displacement => SeriesUnit::Metre,
        SpectralUnit::Force => SeriesUnit::Newton,
        SpectralUnit::Torque => SeriesUnit::NewtonMetre,
        SpectralUnit::Current => SeriesUnit::Ampere,
        SpectralUnit::Voltage => SeriesUnit::Volt,
        SpectralUnit::Dimensionless => SeriesUnit::Dimensionless,
    }
}

/// Unit-PSD white Gaussian noise in the frequency domain, bins `0..=n/2`.
///
/// With the `1/n` inverse transform, scaling bin `k` by `√(S(f_k))` yields a
/// record whose one-sided PSD is `S`. DC is zero and the Nyquist bin (even
/// `n`) is real, with the same mean power as the others.
pub(crate) fn white_bins(n: usize, sample_rate: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let half = n / 2;
    let full = (n as f64 * sample_rate / 4.0).sqrt();
    let mut bins = vec![Complex64::new(0.0, 0.0); half + 1];
    for (k, b) in bins.iter_mut().enumerate().skip(1) {
        let a: f64 = rng.sample(StandardNormal);
        if n % 2 == 0 && k == half {
            *b = Complex64::new(a * full * std::f64::consts::SQRT_2, 0.0);
        } else {
            let c: f64 = rng.sample(StandardNormal);
            *b = Complex64::new(a, c) * full;
        }
    }
    bins
}

/// Real record of length `n` from its non-negative-frequency bins.
pub(crate) fn inverse_real(bins: &[Complex64], n: usize) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, b) in bins.iter().enumerate().take(n / 2 + 1) {
        buf[k] = *b;
        if k > 0 && n - k != k {
            buf[n - k] = b.conj();
        }
    }
    if n % 2 == 0 {
        buf[n / 2].im = 0.0;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// Stationary Gaussian record whose one-sided PSD is `psd(f)`, f in Hz.
pub fn synthesize_noise_fn(
    psd: impl Fn(f64) -> f64,
    unit: SeriesUnit,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<TimeSeries> {
    let n = record_length(duration, sample_rate)?;
    let mut bins = white_bins(n, sample_rate, &mut rng(seed, 0));
    let df = sample_rate / n as f64;
    for (k, b) in bins.iter_mut().enumerate().skip(1) {
        let s = psd(k as f64 * df);
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Domain(format!("target PSD is {s} at {} Hz", k as f64 * df)));
        }
        *b *= s.sqrt();
    }
    Ok(TimeSeries::new(sample_rate, inverse_real(&bins, n), unit)?.with_provenance(seed, GENERATOR))
}

/// Stationary Gaussian record realizing `target`. The target grid must span
/// from the first FFT bin `sample_rate / n` up to Nyquist; between grid
/// points the density is interpolated linearly.
pub fn synthesize_noise(target: &Spectrum, duration: f64, sample_rate: f64, seed: u64) -> Result<TimeSeries> {
    let n = record_length(duration, sample_rate)?;
    let df = sample_rate / n as f64;
    let nyquist = df * (n / 2) as f64;
    let tol = 1e-9;
    if target.grid().first() > df * (1.0 + tol) || target.grid().last() < nyquist * (1.0 - tol) {
        return Err(Error::Domain(format!(
            "target spans [{}, {}] Hz but the record needs [{df}, {nyquist}] Hz",
            target.grid().first(),
            target.grid().last()
        )));
    }
    synthesize_noise_fn(|f| target.value_at(f), series_unit(target.unit()), duration, sample_rate, seed)
}

/// `ts` plus white Gaussian noise of standard deviation `std`.
pub fn add_white_noise(ts: &TimeSeries, std: f64, seed: u64) -> Result<TimeSeries> {
    if !(std.is_finite() && std >= 0.0) {
        return Err(Error::Domain(format!("noise std must be >= 0 (got {std})")));
    }
    let mut r = rng(seed, 7);
    let samples = ts
        .samples()
        .iter()
        .map(|v| v + std * r.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(ts.map_samples(samples, ts.unit())?.with_provenance(seed, GENERATOR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::FrequencyGrid;

    #[test]
    fn flat_target_variance() {
        let fs = 1e4;
        let s0 = 2.5e-3;
        let ts = synthesize_noise_fn(|_| s0, SeriesUnit::Volt, 100.0, fs, 11).unwrap();
        assert_eq!(ts.len(), 1_000_000);
        assert!(ts.mean().abs() < 1e-12);
        let expect = s0 * fs / 2.0;
        assert!(((ts.variance() - expect) / expect).abs() < 0.03, "{}", ts.variance());
        assert_eq!(ts.seed(), Some(11));
        assert_eq!(ts.generator(), Some(GENERATOR));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = synthesize_noise_fn(|f| 1.0 / f, SeriesUnit::Rad, 1.0, 1e3, 5).unwrap();
        let b = synthesize_noise_fn(|f| 1.0 / f, SeriesUnit::Rad, 1.0, 1e3, 5).unwrap();
        let c = synthesize_noise_fn(|f| 1.0 / f, SeriesUnit::Rad, 1.0, 1e3, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn zero_target_gives_zero_record() {
        let g = FrequencyGrid::linear(1.0, 500.0, 10).unwrap();
        let s = Spectrum::zeros(&g, SpectralUnit::Angle);
        let ts = synthesize_noise(&s, 1.0, 1e3, 3).unwrap();
        assert!(ts.samples().iter().all(|v| *v == 0.0));
        assert_eq!(ts.unit(), SeriesUnit::Rad);
    }

    #[test]
    fn grid_must_cover_the_record_band() {
        let g = FrequencyGrid::linear(1.0, 400.0, 10).unwrap();
        let s = Spectrum::zeros(&g, SpectralUnit::Angle);
        assert!(synthesize_noise(&s, 1.0, 1e3, 3).is_err());
        let g = FrequencyGrid::linear(2.0, 500.0, 10).unwrap();
        let s = Spectrum::zeros(&g, SpectralUnit::Angle);
        assert!(synthesize_noise(&s, 1.0, 1e3, 3).is_err());
        assert!(synthesize_noise(&s, 1e-3, 1e3, 3).is_err());
    }

    #[test]
    fn odd_lengths_are_real_and_unbiased() {
        let ts = synthesize_noise_fn(|_| 1.0, SeriesUnit::Volt, 10.0, 9999.9, 1).unwrap();
        assert_eq!(ts.len() % 2, 1);
        let expect = 9999.9 / 2.0;
        assert!(((ts.variance() - expect) / expect).abs() < 0.05);
    }

    #[test]
    fn lorentzian_autocorrelation_decay() {
        // Lorentzian of FWHM Γ/2π: amplitude correlation decays as e^{−Γτ/2}.
        let (fs, f0, gamma) = (2e3, 200.0, 20.0);
        let hw = gamma / (4.0 * std::f64::consts::PI);
        let ts = synthesize_noise_fn(|f| 1.0 / (1.0 + ((f - f0) / hw).powi(2)), SeriesUnit::Rad, 200.0, fs, 9).unwrap();
        let x = ts.samples();
        let n = x.len();
        let var = ts.variance();
        // Envelope of the autocorrelation: combine lags τ and τ + quarter period.
        let acf = |lag: usize| x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / ((n - lag) as f64 * var);
        let quarter = (fs / (4.0 * f0)) as usize;
        let envelope = |lag: usize| (acf(lag).powi(2) + acf(lag + quarter).powi(2)).sqrt();
        let lag = (0.05 * fs) as usize;
        let rate = -(envelope(lag) / envelope(0)).ln() / (lag as f64 / fs);
        assert!(((rate - gamma / 2.0) / (gamma / 2.0)).abs() < 0.1, "{rate}");
    }

    #[test]
    fn additive_noise_level() {
        let ts = TimeSeries::new(1e3, vec![0.0; 100_000], SeriesUnit::Volt).unwrap();
        let noisy = add_white_noise(&ts, 0.5, 1).unwrap();
        assert!((noisy.variance().sqrt() - 0.5).abs() < 0.01);
        assert!(add_white_noise(&ts, -1.0, 1).is_err());
    }
}
