use super::closed_loop::MIN_OVERSAMPLING;
use super::synth::record_length;
use super::timeseries::{SeriesUnit, TimeSeries};
use crate::error::{Error, Result};
use crate::mech::OscillatorParams;

/// Free decay `θ(t) = A e^{−Γ0 t/2} cos(Ω0 t)`.
pub fn simulate_ringdown(osc: &OscillatorParams, initial_amplitude: f64, duration: f64, sample_rate: f64) -> Result<TimeSeries> {
    osc.validate()?;
    if !initial_amplitude.is_finite() {
        return Err(Error::Domain("initial amplitude must be finite".into()));
    }
    if sample_rate < MIN_OVERSAMPLING * osc.frequency_hz() {
        return Err(Error::Domain(format!(
            "sample_rate {sample_rate} Hz is below {MIN_OVERSAMPLING} × the {} Hz resonance",
            osc.frequency_hz()
        )));
    }
    let n = record_length(duration, sample_rate)?;
    let (w0, half_rate) = (osc.omega0, 0.5 * osc.gamma0());
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            initial_amplitude * (-half_rate * t).exp() * (w0 * t).cos()
        })
        .collect();
    TimeSeries::new(sample_rate, samples, SeriesUnit::Rad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_reaches_one_over_e_at_two_over_gamma() {
        let o = OscillatorParams::reference_device().with_quality_factor(1e3);
        let fs = 20.0 * o.frequency_hz();
        let t_e = 2.0 / o.gamma0();
        let ts = simulate_ringdown(&o, 2.0, 1.2 * t_e, fs).unwrap();
        // Peak of |θ| in one period around t_e.
        let i = (t_e * fs) as usize;
        let period = (fs / o.frequency_hz()).ceil() as usize;
        let peak = ts.samples()[i - period / 2..i + period / 2].iter().fold(0f64, |m, v| m.max(v.abs()));
        assert!((peak - 2.0 / std::f64::consts::E).abs() < 2e-3 * 2.0);
    }

    #[test]
    fn energy_decay_time() {
        let o = OscillatorParams::reference_device();
        assert!((1.0 / o.gamma0() - 60.43).abs() < 0.01);
        assert!((o.gamma0() / (2.0 * std::f64::consts::PI) - 2.6337e-3).abs() < 1e-6);
    }

    #[test]
    fn needs_oversampling() {
        let o = OscillatorParams::reference_device();
        assert!(simulate_ringdown(&o, 1.0, 1.0, 2.0 * o.frequency_hz()).is_err());
    }
}
