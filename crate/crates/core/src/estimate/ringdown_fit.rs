use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::sim::TimeSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingdownFit {
    /// Energy decay rate Γ0, rad/s (the envelope decays at Γ0/2).
    pub gamma0: f64,
    pub q: f64,
    /// Envelope extrapolated to the first fitted sample.
    pub amplitude: f64,
    pub sigma_gamma0: f64,
    /// RMS of the weighted log residuals.
    pub residual_rms: f64,
    pub points_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingdownOptions {
    /// Samples before this time (e.g. lock-in settling) are skipped, s.
    pub start_time: f64,
    /// Samples below this fraction of the largest fitted envelope value are
    /// skipped, keeping the noise floor out of the fit.
    pub min_fraction: f64,
}

impl Default for RingdownOptions {
    fn default() -> Self {
        Self { start_time: 0.0, min_fraction: 0.02 }
    }
}

/// Log-linear fit `ln e(t) = ln A − (Γ0/2) t` to a decaying envelope,
/// weighted by `e²` (constant additive noise on the envelope).
pub fn fit_ringdown(envelope: &TimeSeries, omega0: f64, options: RingdownOptions) -> Result<RingdownFit> {
    require_positive("omega0", omega0)?;
    let start = (options.start_time * envelope.sample_rate()).ceil().max(0.0) as usize;
    let x = envelope.samples().get(start..).unwrap_or(&[]);
    let max = x.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::Fit("envelope has no positive samples".into()));
    }
    let threshold = options.min_fraction * max;
    let t0 = envelope.time(start);
    let (mut sw, mut st, mut sy, mut stt, mut sty, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0, 0usize);
    let mut pts = Vec::new();
    for (i, &e) in x.iter().enumerate() {
        if e <= threshold {
            continue;
        }
        let t = envelope.time(start + i) - t0;
        let (w, y) = (e * e, e.ln());
        sw += w;
        st += w * t;
        sy += w * y;
        stt += w * t * t;
        sty += w * t * y;
        n += 1;
        pts.push((t, y, w));
    }
    if n < 3 {
        return Err(Error::Fit(format!("only {n} envelope samples above the floor")));
    }
    let det = sw * stt - st * st;
    if !(det > 0.0) {
        return Err(Error::Fit("envelope samples span no time".into()));
    }
    let slope = (sw * sty - st * sy) / det;
    let intercept = (sy - slope * st) / sw;
    let gamma0 = -2.0 * slope;
    if !(gamma0 > 0.0) {
        return Err(Error::Fit(format!("envelope does not decay (fitted rate {gamma0} 1/s)")));
    }
    let chi2: f64 = pts.iter().map(|(t, y, w)| w * (y - intercept - slope * t).powi(2)).sum();
    let dof = (n - 2) as f64;
    let sigma_slope = (chi2 / dof * sw / det).sqrt();
    Ok(RingdownFit {
        gamma0,
        q: omega0 / gamma0,
        amplitude: intercept.exp(),
        sigma_gamma0: 2.0 * sigma_slope,
        residual_rms: (chi2 / sw).sqrt(),
        points_used: n,
    })
}
