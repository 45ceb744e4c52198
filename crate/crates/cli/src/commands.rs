use std::path::Path;

use serde_json::{json, Value};
use torquill_core::constants::TWO_PI;
use torquill_core::estimate::{
    aod_calibration, aod_calibration_fit, fit_lorentzian, fit_ringdown, infer_inertia, mode_temperature,
    occupancy_from_data, thermal_reference_calibration, tone_amplitude, welch_psd, AodPoint, CalibrationFactor,
    CalibrationMethod, FitReport, LorentzianOptions, RingdownOptions, WelchParams,
};
use torquill_core::feedback::{cooling_limit, gain_sweep, Bookkeeping, CoolingInputs, CoolingPoint};
use torquill_core::mech::{self, zero_point_peak};
use torquill_core::readout::{self, observed_angle_psd, NoiseBudget, OpticalLever};
use torquill_core::sim::{
    add_white_noise, aod_deflection, aod_tone, lock_in_demodulate, lock_in_settling_time, simulate_closed_loop,
    simulate_ringdown, AodTone, SeriesUnit, TimeSeries,
};
use torquill_core::{SpectralUnit, Spectrum};

use crate::config::{LoadedConfig, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{read_record, Output, RecordFormat};

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn flag_error(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("--{flag}: {msg}"))
}

/// Resonance summary of one probe setting.
fn budget_summary(cfg: &ScenarioConfig, lever: &OpticalLever) -> CliResult<Value> {
    let osc = cfg.oscillator();
    let f0 = osc.frequency_hz();
    let s_imp = lever.imprecision_at(f0)?;
    let inputs = CoolingInputs::from_model(&osc, lever)?;
    Ok(json!({
        "power": lever.beam.power,
        "s_imp": s_imp,
        "n_imp": inputs.n_imp,
        "n_ba": inputs.n_ba,
        "n_th": inputs.n_th,
        "zero_point_peak": zero_point_peak(&osc),
        "db_below_zp": 10.0 * (zero_point_peak(&osc) / s_imp).log10(),
    }))
}

fn write_budget(out: &mut Output, name: &str, b: &NoiseBudget) -> CliResult<()> {
    let mut header = vec!["freq_hz (Hz)".to_string()];
    header.extend(NoiseBudget::COLUMNS.iter().map(|c| format!("{c} (rad^2/Hz)")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = b.grid.iter().enumerate().map(|(i, f)| {
        let mut row = vec![num(f)];
        row.extend(NoiseBudget::COLUMNS.iter().map(|c| num(b.column(c).map_or(f64::NAN, |v| v[i]))));
        row
    });
    out.csv(name, &header, rows)?;
    Ok(())
}

/// Itemized observed-angle budget, one CSV per probe power.
pub fn budget(cfg: &LoadedConfig, out: &mut Output, powers: &[f64]) -> CliResult<()> {
    let c = &cfg.config;
    for (i, p) in powers.iter().enumerate() {
        if !(p.is_finite() && *p > 0.0) {
            return Err(flag_error("power-sweep", format!("entry {i} must be a power > 0 W (got {p})")));
        }
    }
    let osc = c.oscillator();
    let grid = c.grid()?;
    let base = c.lever();
    let mut summary = budget_summary(c, &base)?;
    let sweep: Vec<f64> = if powers.is_empty() { vec![base.beam.power] } else { powers.to_vec() };
    let mut budgets = Vec::new();
    for (i, p) in sweep.iter().enumerate() {
        let lever = OpticalLever { beam: base.beam.with_power(*p), ..base.clone() };
        let b = observed_angle_psd(&osc, &lever.beam, &lever.noise, lever.lever, &grid)?;
        let name = if powers.is_empty() { "budget.csv".to_string() } else { format!("budget_{i}.csv") };
        write_budget(out, &name, &b)?;
        let mut s = budget_summary(c, &lever)?;
        s["file"] = json!(name);
        budgets.push(s);
    }
    summary["budgets"] = json!(budgets);
    summary["grid_points"] = json!(grid.len());
    out.report("budget.json", &summary)?;
    Ok(())
}

fn cooling_row(p: &CoolingPoint, kind: &str) -> Vec<String> {
    vec![
        num(p.gamma_fb),
        num(p.gamma_eff),
        num(p.n_eff),
        num(p.n_thermal_term),
        num(p.n_imprecision_term),
        num(p.n_backaction_term),
        p.tail_dominated.to_string(),
        kind.to_string(),
    ]
}

/// Occupancy against feedback damping Γ_fb (rad/s), plus the analytic optimum.
pub fn cool(cfg: &LoadedConfig, out: &mut Output, gains: &[f64]) -> CliResult<()> {
    let c = &cfg.config;
    let osc = c.oscillator();
    let lever = c.lever();
    let g0 = osc.gamma0();
    let gains: Vec<f64> = if gains.is_empty() {
        std::iter::once(0.0).chain((0..=70).map(|i| g0 * 10f64.powf(i as f64 * 0.1))).collect()
    } else {
        gains.to_vec()
    };
    if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(flag_error("gains", format!("feedback rates must be >= 0 rad/s (got {g})")));
    }
    let bk = Bookkeeping::Exact;
    let sweep = gain_sweep(&osc, &lever, &c.feedback, &gains, bk)?;
    let inputs = CoolingInputs::from_model(&osc, &lever)?;
    let mut optimum = inputs.optimum(bk)?;
    optimum.gamma_fb = optimum.gamma_eff - g0;
    let header = [
        "gamma_fb (rad/s)",
        "gamma_eff (rad/s)",
        "n_eff",
        "n_th_term",
        "n_imp_term",
        "n_ba_term",
        "tail_dominated",
        "kind",
    ];
    let rows = sweep.iter().map(|p| cooling_row(p, "sweep")).chain(std::iter::once(cooling_row(&optimum, "optimum")));
    out.csv("cool.csv", &header, rows)?;
    let best = sweep.iter().min_by(|a, b| a.n_eff.total_cmp(&b.n_eff)).copied();
    out.report(
        "cool.json",
        &json!({
            "gamma0": g0,
            "n_th": inputs.n_th,
            "n_ba": inputs.n_ba,
            "n_imp": inputs.n_imp,
            "cooling_limit": cooling_limit(inputs.n_th, inputs.n_imp),
            "optimum": optimum,
            "sweep_minimum": best,
            "points": sweep.len(),
        }),
    )?;
    Ok(())
}

/// One closed-loop realization: in-loop, out-of-loop and feedback-torque records.
pub fn simulate(cfg: &LoadedConfig, out: &mut Output, seed: u64, format: RecordFormat) -> CliResult<()> {
    let c = &cfg.config;
    let osc = c.oscillator();
    let lever = c.lever();
    let fs = c.sample_rate();
    let rec = simulate_closed_loop(&osc, &lever, &c.feedback, c.sim.duration, fs, seed)?;
    let files: Vec<String> = [("theta_obs", &rec.theta_obs), ("theta_phys", &rec.theta_phys), ("torque_fb", &rec.torque_fb)]
        .into_iter()
        .map(|(stem, ts)| out.record(stem, ts, format).map(|p| p.display().to_string()))
        .collect::<CliResult<_>>()?;
    let zp = osc.theta_zp();
    out.report(
        "simulate.json",
        &json!({
            "sample_rate": fs,
            "samples": rec.theta_obs.len(),
            "gamma_eff": osc.gamma0() + c.feedback.gamma_fb,
            "variance_obs": rec.theta_obs.variance(),
            "variance_phys": rec.theta_phys.variance(),
            "n_from_variance": rec.theta_phys.variance() / (2.0 * zp * zp) - 0.5,
            "files": files,
        }),
    )?;
    Ok(())
}

pub struct RingdownArgs<'a> {
    pub input: Option<&'a Path>,
    pub amplitude: f64,
    pub noise: f64,
    pub bandwidth: Option<f64>,
    pub format: RecordFormat,
}

/// Free decay (simulated, or read from `input`), lock-in envelope and Q fit.
pub fn ringdown(cfg: &LoadedConfig, out: &mut Output, seed: u64, args: RingdownArgs) -> CliResult<()> {
    let c = &cfg.config;
    let osc = c.oscillator();
    let f0 = osc.frequency_hz();
    if !(args.amplitude.is_finite() && args.amplitude > 0.0) {
        return Err(flag_error("amplitude", format!("must be > 0 (got {})", args.amplitude)));
    }
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(flag_error("noise", format!("must be >= 0 (got {})", args.noise)));
    }
    let record = match args.input {
        Some(p) => read_record(p)?,
        None => {
            let ring = simulate_ringdown(&osc, args.amplitude, c.sim.duration, c.sample_rate())?;
            let noisy = add_white_noise(&ring, args.noise * args.amplitude, seed)?;
            out.record("ringdown", &noisy, args.format)?;
            noisy
        }
    };
    let bandwidth = args.bandwidth.unwrap_or((50.0 * osc.gamma0() / TWO_PI).clamp(1.0, 0.05 * f0));
    if !(bandwidth > 0.0 && bandwidth < f0) {
        return Err(flag_error("bandwidth", format!("must lie in (0, {f0}) Hz (got {bandwidth})")));
    }
    let envelope = lock_in_demodulate(&record, f0, bandwidth)?;
    out.record("envelope", &envelope, args.format)?;
    let options = RingdownOptions { start_time: 2.0 * lock_in_settling_time(bandwidth), ..Default::default() };
    let fit = fit_ringdown(&envelope, osc.omega0, options)?;
    let report = FitReport::ringdown(&fit, [options.start_time, envelope.duration()]);
    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    value["lock_in_bandwidth"] = json!(bandwidth);
    value["configured_q"] = json!(osc.quality_factor);
    out.report("ringdown.json", &value)?;
    Ok(())
}

fn welch_near_resonance(cfg: &ScenarioConfig, ts: &TimeSeries, default_half_span: f64) -> CliResult<Spectrum> {
    let f0 = cfg.oscillator.frequency_hz;
    let params = WelchParams::new(cfg.fit.segment_length, cfg.fit.overlap);
    let spec = welch_psd(ts, &params)?;
    let half = cfg.fit.half_span_hz.unwrap_or(default_half_span);
    Ok(spec.restrict(f0 - half, f0 + half)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CalibrationKind {
    /// Calibration tones from the acousto-optic deflector.
    Aod,
    /// Thermal peak of a mode with known temperature and inertia.
    Thermal,
}

/// Volts-to-radians factor from AOD tones or from a thermal reference.
pub fn calibrate(cfg: &LoadedConfig, out: &mut Output, seed: u64, kind: CalibrationKind, input: Option<&Path>) -> CliResult<()> {
    let c = &cfg.config;
    let cal = &c.calibration;
    let beam = c.beam_params();
    match kind {
        CalibrationKind::Aod => {
            let deflections: Vec<f64> = cal
                .depths
                .iter()
                .map(|d| aod_deflection(beam.wavelength, cal.v_acoustic, *d))
                .collect::<Result<_, _>>()?;
            let (factor, extra) = match input {
                Some(path) => {
                    if cal.depths.len() != 1 {
                        return Err(CliError::Config("calibration.depths: a recorded tone needs exactly one depth".into()));
                    }
                    let ts = read_record(path)?;
                    let dv = tone_amplitude(&ts, cal.mod_rate)?;
                    (aod_calibration(dv, beam.wavelength, cal.v_acoustic, cal.depths[0])?, json!({ "volt_amplitude": dv }))
                }
                None => {
                    if cal.depths.len() < 3 {
                        return Err(CliError::Config("calibration.depths: a simulated sweep needs at least 3 depths".into()));
                    }
                    let mut points = Vec::new();
                    for (i, depth) in cal.depths.iter().enumerate() {
                        let tone = AodTone {
                            v_acoustic: cal.v_acoustic,
                            f_mod_depth: *depth,
                            f_mod_rate: cal.mod_rate,
                            calibration_gain: cal.gain,
                        };
                        let ts = aod_tone(&beam, &tone, cal.duration, cal.sample_rate)?;
                        let ts = add_white_noise(&ts, cal.noise_std, seed.wrapping_add(i as u64))?;
                        points.push(AodPoint { f_depth: *depth, volt_amplitude: tone_amplitude(&ts, cal.mod_rate)? });
                    }
                    let fit = aod_calibration_fit(&points, beam.wavelength, cal.v_acoustic)?;
                    let extra = json!({
                        "points": points,
                        "slope": fit.slope,
                        "intercept": fit.intercept,
                        "r_squared": fit.r_squared,
                        "injected_rad_per_volt": 1.0 / cal.gain,
                    });
                    (fit.factor, extra)
                }
            };
            out.report(
                "calibrate.json",
                &json!({
                    "method": "aod",
                    "rad_per_volt": factor.rad_per_volt,
                    "relative_error": factor.relative_error,
                    "deflections_rad": deflections,
                    "detail": extra,
                }),
            )?;
        }
        CalibrationKind::Thermal => {
            let path = input.ok_or_else(|| flag_error("input", "thermal calibration needs a voltage record"))?;
            let ts = read_record(path)?;
            if ts.unit() != SeriesUnit::Volt {
                return Err(CliError::Numerical(format!("{} is in {}, expected V", path.display(), ts.unit().symbol())));
            }
            let osc = c.oscillator();
            let hw = osc.frequency_hz() / (2.0 * osc.quality_factor);
            let spec = welch_near_resonance(c, &ts, 40.0 * hw)?;
            let (factor, fit) = thermal_reference_calibration(&spec, &osc, c.fit.exclusion_hz)?;
            let report = FitReport::lorentzian(&fit, [spec.grid().first(), spec.grid().last()]);
            out.report(
                "calibrate.json",
                &json!({
                    "method": "thermal",
                    "rad_per_volt": factor.rad_per_volt,
                    "relative_error": factor.relative_error,
                    "fit": report,
                }),
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FitModel {
    /// Thermal line with fixed Q; reports the mode temperature.
    Lorentzian,
    /// Feedback-cooled in-loop spectrum; reports the occupancy.
    ClosedLoop,
}

/// Spectral fit of a recorded angle (or calibrated voltage) record.
pub fn fit(cfg: &LoadedConfig, out: &mut Output, input: &Path, model: FitModel) -> CliResult<()> {
    let c = &cfg.config;
    let osc = c.oscillator();
    let ts = read_record(input)?;
    let cal = match (ts.unit(), c.fit.rad_per_volt) {
        (SeriesUnit::Rad, _) => None,
        (SeriesUnit::Volt, Some(a)) => Some(CalibrationFactor::new(a, 0.0, CalibrationMethod::Aod)?),
        (SeriesUnit::Volt, None) => return Err(CliError::Config("fit.rad_per_volt: needed to fit a voltage record".into())),
        (u, _) => return Err(CliError::Numerical(format!("cannot fit a record in {}", u.symbol()))),
    };
    let f0 = osc.frequency_hz();
    match model {
        FitModel::Lorentzian => {
            let hw = f0 / (2.0 * osc.quality_factor);
            let spec = welch_near_resonance(c, &ts, 40.0 * hw)?;
            let spec = match &cal {
                Some(k) => k.apply(&spec)?,
                None => spec,
            };
            let options =
                LorentzianOptions { q: osc.quality_factor, center_guess: f0, exclusion_halfwidth: c.fit.exclusion_hz };
            let fit = fit_lorentzian(&spec, &options)?;
            let report = FitReport::lorentzian(&fit, [spec.grid().first(), spec.grid().last()]);
            let mut value = serde_json::to_value(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
            value["mode_temperature"] = json!(mode_temperature(&fit, osc.inertia, osc.omega0, osc.quality_factor)?);
            if osc.temperature > 0.0 {
                value["inferred_inertia"] = json!(infer_inertia(&fit, osc.temperature, osc.omega0, osc.quality_factor)?);
            }
            value["averages"] = json!(spec.averages());
            out.report("fit.json", &value)?;
        }
        FitModel::ClosedLoop => {
            let spec = welch_near_resonance(c, &ts, 0.2 * f0)?;
            if spec.unit() != SpectralUnit::Angle && cal.is_none() {
                return Err(CliError::Numerical("closed-loop fit needs an angle spectrum".into()));
            }
            let est = occupancy_from_data(&spec, cal.as_ref(), &osc, &c.feedback)?;
            let report = FitReport::closed_loop(&est, [spec.grid().first(), spec.grid().last()]);
            let mut value = serde_json::to_value(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
            value["n_imp"] = json!(readout::imprecision_occupancy(&osc, est.s_imp));
            value["n_th"] = json!(mech::thermal_occupancy(osc.temperature, f0, mech::OccupancyModel::Exact)?);
            value["averages"] = json!(spec.averages());
            out.report("fit.json", &value)?;
        }
    }
    Ok(())
}
