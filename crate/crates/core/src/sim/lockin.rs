use super::timeseries::TimeSeries;
use crate::constants::TWO_PI;
use crate::error::{Error, Result};

/// Cascaded one-pole low-pass stages after the mixer.
pub const LOCK_IN_STAGES: usize = 4;

/// `√(2^{1/4} − 1)`: −3 dB point of four identical one-pole stages relative
/// to the cutoff of each.
const STAGE_BANDWIDTH_RATIO: f64 = 0.434_979_6;

fn stage_cutoff(bandwidth: f64) -> f64 {
    bandwidth / STAGE_BANDWIDTH_RATIO
}

/// Time after which a step has settled to better than 1e-4.
pub fn lock_in_settling_time(bandwidth: f64) -> f64 {
    15.0 / (TWO_PI * stage_cutoff(bandwidth))
}

/// Amplitude envelope `2|I + iQ|` of the component of `ts` near `f_demod`.
/// `bandwidth` is the −3 dB bandwidth of the output filter.
pub fn lock_in_demodulate(ts: &TimeSeries, f_demod: f64, bandwidth: f64) -> Result<TimeSeries> {
    let fs = ts.sample_rate();
    if !(f_demod > 0.0 && f_demod < 0.5 * fs) {
        return Err(Error::Domain(format!("demodulation frequency {f_demod} Hz must lie in (0, {}) Hz", 0.5 * fs)));
    }
    if !(bandwidth > 0.0 && bandwidth < f_demod) {
        return Err(Error::Domain(format!("bandwidth {bandwidth} Hz must lie in (0, {f_demod}) Hz")));
    }
    let alpha = -(-TWO_PI * stage_cutoff(bandwidth) / fs).exp_m1();
    let mut i_stages = [0.0f64; LOCK_IN_STAGES];
    let mut q_stages = [0.0f64; LOCK_IN_STAGES];
    let w = TWO_PI * f_demod / fs;
    let envelope = ts
        .samples()
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let (s, c) = (w * n as f64).sin_cos();
            let (mut i, mut q) = (x * c, x * s);
            for (si, sq) in i_stages.iter_mut().zip(q_stages.iter_mut()) {
                *si += alpha * (i - *si);
                *sq += alpha * (q - *sq);
                i = *si;
                q = *sq;
            }
            2.0 * i.hypot(q)
        })
        .collect();
    ts.map_samples(envelope, ts.unit())
}
