use torquill_core::beam::BeamParams;
use torquill_core::estimate::{occupancy_from_data, welch_psd, CalibrationFactor, CalibrationMethod, FitReport, WelchParams};
use torquill_core::feedback::{cooling_point, Bookkeeping, CoolingInputs, FeedbackConfig};
use torquill_core::mech::OscillatorParams;
use torquill_core::readout::OpticalLever;
use torquill_core::sim::{simulate_closed_loop, SeriesUnit, TimeSeries};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn setup() -> (OscillatorParams, OpticalLever) {
    (
        OscillatorParams::reference_device().with_quality_factor(1e3),
        OpticalLever::quantum_limited(BeamParams::pendulum_probe().with_power(1e-3)),
    )
}

#[test]
fn simulated_in_loop_record_gives_closed_form_occupancy() {
    let (osc, lever) = setup();
    let inputs = CoolingInputs::from_model(&osc, &lever).unwrap();
    let ge = 30.0 * osc.gamma0();
    let fb = FeedbackConfig::ideal(ge - osc.gamma0());
    let fs = 10.0 * osc.frequency_hz();
    let rec = simulate_closed_loop(&osc, &lever, &fb, (1 << 22) as f64 / fs, fs, 5).unwrap();
    let f0 = osc.frequency_hz();
    let spec = welch_psd(&rec.theta_obs, &WelchParams::new(1 << 15, 0.5)).unwrap();
    let spec = spec.restrict(f0 - 0.2 * f0, f0 + 0.2 * f0).unwrap();
    let est = occupancy_from_data(&spec, None, &osc, &fb).unwrap();
    let closed = cooling_point(&inputs, ge, Bookkeeping::Exact).unwrap().n_eff;
    assert!(rel(est.gamma_eff, ge) < 0.05, "{} vs {ge}", est.gamma_eff);
    assert!(rel(est.n_eff, closed) < 0.1, "{} vs {closed}", est.n_eff);
    assert!(est.sigma > 0.0 && est.sigma < 0.1 * est.n_eff);
    assert!(!est.flagged, "rms {}", est.residual_rms);

    let report = FitReport::closed_loop(&est, [spec.grid().first(), spec.grid().last()]);
    let v: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(v["model"], "closed_loop_observed");
}

#[test]
fn voltage_record_needs_calibration() {
    let (osc, lever) = setup();
    let fb = FeedbackConfig::ideal(9.0 * osc.gamma0());
    let fs = 10.0 * osc.frequency_hz();
    let rec = simulate_closed_loop(&osc, &lever, &fb, (1 << 21) as f64 / fs, fs, 8).unwrap();
    let gain = 4e4;
    let volts = rec.theta_obs.scaled(gain, SeriesUnit::Volt).unwrap();
    let params = WelchParams::new(1 << 15, 0.5);
    let f0 = osc.frequency_hz();
    let sv = welch_psd(&volts, &params).unwrap().restrict(0.8 * f0, 1.2 * f0).unwrap();
    assert!(occupancy_from_data(&sv, None, &osc, &fb).is_err());
    let cal = CalibrationFactor::new(1.0 / gain, 0.0, CalibrationMethod::Aod).unwrap();
    let from_volts = occupancy_from_data(&sv, Some(&cal), &osc, &fb).unwrap();
    let sa = welch_psd(&rec.theta_obs, &params).unwrap().restrict(0.8 * f0, 1.2 * f0).unwrap();
    let from_angle = occupancy_from_data(&sa, None, &osc, &fb).unwrap();
    assert!(rel(from_volts.n_eff, from_angle.n_eff) < 1e-6);
}

#[test]
fn records_survive_csv_and_binary_round_trips() {
    let (osc, lever) = setup();
    let fs = 10.0 * osc.frequency_hz();
    let rec = simulate_closed_loop(&osc, &lever, &FeedbackConfig::open_loop(), 0.01, fs, 2).unwrap();
    let mut csv = Vec::new();
    rec.theta_obs.write_csv(&mut csv).unwrap();
    let back = TimeSeries::read_csv(csv.as_slice()).unwrap();
    assert_eq!(back.samples(), rec.theta_obs.samples());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.bin");
    rec.theta_obs.save_binary(&path).unwrap();
    assert_eq!(TimeSeries::load_binary(&path).unwrap(), rec.theta_obs);
}

#[test]
fn open_loop_record_gives_thermal_occupancy() {
    let (osc, lever) = setup();
    let fs = 10.0 * osc.frequency_hz();
    let rec = simulate_closed_loop(&osc, &lever, &FeedbackConfig::open_loop(), (1 << 22) as f64 / fs, fs, 12).unwrap();
    let f0 = osc.frequency_hz();
    let spec = welch_psd(&rec.theta_obs, &WelchParams::new(1 << 16, 0.5)).unwrap();
    let spec = spec.restrict(0.95 * f0, 1.05 * f0).unwrap();
    let est = occupancy_from_data(&spec, None, &osc, &FeedbackConfig::open_loop()).unwrap();
    let n_th = CoolingInputs::from_model(&osc, &lever).unwrap().n_th;
    assert!(rel(est.n_eff, n_th) < 0.05, "{} vs {n_th}", est.n_eff);
    assert!(!est.flagged);
}
