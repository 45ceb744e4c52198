use num_complex::Complex64;

use super::synth::{inverse_real, record_length, rng, white_bins, GENERATOR};
use super::timeseries::{SeriesUnit, TimeSeries};
use crate::error::{Error, Result};
use crate::feedback::{loop_point, FeedbackConfig};
use crate::mech::OscillatorParams;
use crate::readout::OpticalLever;

/// Minimum ratio of sample rate to mechanical frequency.
pub const MIN_OVERSAMPLING: f64 = 10.0;

/// One realization of the feedback loop.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopRecord {
    /// Out-of-loop angle, rad.
    pub theta_phys: TimeSeries,
    /// In-loop angle `θ_phys + θ_imp`, rad.
    pub theta_obs: TimeSeries,
    /// Applied feedback torque, N·m.
    pub torque_fb: TimeSeries,
    /// The imprecision noise realization, rad.
    pub theta_imp: TimeSeries,
}

/// Simulates the loop in the frequency domain:
///
/// ```text
/// θ_phys = χ_eff (τ_tot + L θ_imp),   θ_obs = θ_phys + θ_imp,   τ_fb = L θ_obs
/// ```
///
/// with independent Gaussian torque (thermal, back-action, loop) and
/// imprecision noise.
pub fn simulate_closed_loop(
    osc: &OscillatorParams,
    lever: &OpticalLever,
    fb: &FeedbackConfig,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<ClosedLoopRecord> {
    osc.validate()?;
    lever.validate()?;
    fb.validate(osc)?;
    if sample_rate < MIN_OVERSAMPLING * osc.frequency_hz() {
        return Err(Error::Domain(format!(
            "sample_rate {sample_rate} Hz is below {MIN_OVERSAMPLING} × the {} Hz resonance",
            osc.frequency_hz()
        )));
    }
    let n = record_length(duration, sample_rate)?;
    let df = sample_rate / n as f64;
    let mut torque = white_bins(n, sample_rate, &mut rng(seed, 1));
    let mut imp = white_bins(n, sample_rate, &mut rng(seed, 2));
    let mut phys = vec![Complex64::new(0.0, 0.0); torque.len()];
    let mut obs = phys.clone();
    let mut fb_torque = phys.clone();
    for k in 1..torque.len() {
        let p = loop_point(osc, lever, fb, k as f64 * df)?;
        // Forward FFT bins at +f carry e^{+iΩt}; the model uses e^{−iΩt}.
        let chi = p.chi_eff.conj();
        let filter = p.filter.conj();
        torque[k] *= p.torque.sqrt();
        imp[k] *= p.imprecision.sqrt();
        phys[k] = chi * (torque[k] + filter * imp[k]);
        obs[k] = phys[k] + imp[k];
        fb_torque[k] = filter * obs[k];
    }
    let series = |bins: &[Complex64], unit| {
        TimeSeries::new(sample_rate, inverse_real(bins, n), unit).map(|t| t.with_provenance(seed, GENERATOR))
    };
    Ok(ClosedLoopRecord {
        theta_phys: series(&phys, SeriesUnit::Rad)?,
        theta_obs: series(&obs, SeriesUnit::Rad)?,
        torque_fb: series(&fb_torque, SeriesUnit::NewtonMetre)?,
        theta_imp: series(&imp, SeriesUnit::Rad)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamParams;

    fn scaled() -> OscillatorParams {
        OscillatorParams::reference_device().with_quality_factor(1e4)
    }

    #[test]
    fn undersampling_is_rejected() {
        let o = scaled();
        let lv = OpticalLever::quantum_limited(BeamParams::pendulum_probe());
        let r = simulate_closed_loop(&o, &lv, &FeedbackConfig::open_loop(), 0.1, 5.0 * o.frequency_hz(), 1);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn loop_algebra_holds_sample_by_sample() {
        let o = scaled();
        let lv = OpticalLever::quantum_limited(BeamParams::pendulum_probe().with_power(1e-3));
        let fb = FeedbackConfig::ideal(100.0 * o.gamma0());
        let fs = 12.0 * o.frequency_hz();
        let r = simulate_closed_loop(&o, &lv, &fb, 0.05, fs, 3).unwrap();
        let scale = r.theta_obs.variance().sqrt();
        for ((o, p), i) in r.theta_obs.samples().iter().zip(r.theta_phys.samples()).zip(r.theta_imp.samples()) {
            assert!((o - p - i).abs() < 1e-9 * scale);
        }
        assert_eq!(r.theta_phys.seed(), Some(3));
        let again = simulate_closed_loop(&o, &lv, &fb, 0.05, fs, 3).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn open_loop_variance_is_thermal() {
        // Equipartition: ⟨θ²⟩ = 2θ_zp²(n_th + ½), up to 1/Q². A low Q keeps the
        // record short for the same statistical error √(2/Γ0T).
        let o = OscillatorParams::reference_device().with_quality_factor(300.0);
        let lv = OpticalLever::quantum_limited(BeamParams::pendulum_probe().with_power(1e-9));
        let fs = 10.0 * o.frequency_hz();
        let r = simulate_closed_loop(&o, &lv, &FeedbackConfig::open_loop(), 10.0, fs, 21).unwrap();
        let n = r.theta_phys.variance() / (2.0 * o.theta_zp().powi(2));
        assert!(((n - o.n_th()) / o.n_th()).abs() < 0.05, "{n} vs {}", o.n_th());
    }
}
