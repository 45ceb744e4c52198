//! Scenario files: TOML (default) or JSON with the same layout.
//!
//! ```toml
//! [oscillator]
//! frequency_hz = 35950.0
//! quality_factor = 1.365e7
//! inertia = 5.54e-17
//! temperature = 290.0
//!
//! [beam]          # optional; defaults to the pendulum probe
//! power = 10e-3
//! lever = "mirrored"
//!
//! [grid]          # optional
//! f_min = 1e3
//! f_max = 1e5
//! points = 4001
//! spacing = "log"
//! ```

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use torquill_core::beam::{ideal_responsivity, BeamParams};
use torquill_core::constants::TWO_PI;
use torquill_core::feedback::FeedbackConfig;
use torquill_core::mech::OscillatorParams;
use torquill_core::readout::{ExtraneousNoise, Lever, OpticalLever};
use torquill_core::sim::{AOD_ACOUSTIC_VELOCITY, MIN_OVERSAMPLING};
use torquill_core::FrequencyGrid;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorBlock {
    pub frequency_hz: f64,
    pub quality_factor: f64,
    /// kg·m²
    pub inertia: f64,
    /// K
    pub temperature: f64,
}

impl Default for OscillatorBlock {
    fn default() -> Self {
        let r = OscillatorParams::reference_device();
        Self { frequency_hz: r.frequency_hz(), quality_factor: r.quality_factor, inertia: r.inertia, temperature: r.temperature }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamBlock {
    pub wavelength: f64,
    pub waist_radius: f64,
    /// W
    pub power: f64,
    pub efficiency: f64,
    /// rad
    pub gouy_shift: f64,
    /// A/W; the ideal `q_e/ħω` when absent.
    pub responsivity: Option<f64>,
    pub lever: Lever,
}

impl Default for BeamBlock {
    fn default() -> Self {
        Self {
            wavelength: 1064e-9,
            waist_radius: 180e-6,
            power: 10e-3,
            efficiency: 0.244,
            gouy_shift: FRAC_PI_2,
            responsivity: None,
            lever: Lever::Mirrored,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridBlock {
    /// Hz; a tenth of the resonance frequency when absent.
    pub f_min: Option<f64>,
    /// Hz; ten times the resonance frequency when absent.
    pub f_max: Option<f64>,
    pub points: usize,
    pub spacing: Spacing,
    /// Log grids get a linear patch over ± this many line widths.
    pub refine_linewidths: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { f_min: None, f_max: None, points: 4001, spacing: Spacing::Log, refine_linewidths: 100.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimBlock {
    /// s
    pub duration: f64,
    /// Hz; ten times the resonance frequency when absent.
    pub sample_rate: Option<f64>,
    pub seed: u64,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self { duration: 1.0, sample_rate: None, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationBlock {
    /// m/s
    pub v_acoustic: f64,
    /// AOD drive-frequency modulation depths, Hz.
    pub depths: Vec<f64>,
    /// Hz
    pub mod_rate: f64,
    /// Detector gain used for simulated tones, V/rad.
    pub gain: f64,
    /// s
    pub duration: f64,
    /// Hz
    pub sample_rate: f64,
    /// White noise added to simulated tones, V.
    pub noise_std: f64,
}

impl Default for CalibrationBlock {
    fn default() -> Self {
        Self {
            v_acoustic: AOD_ACOUSTIC_VELOCITY,
            depths: vec![20e3, 40e3, 60e3, 80e3, 100e3],
            mod_rate: 1e3,
            gain: 1e5,
            duration: 0.1,
            sample_rate: 100e3,
            noise_std: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitBlock {
    pub segment_length: usize,
    pub overlap: f64,
    /// Half-width of the fitted band around resonance, Hz.
    pub half_span_hz: Option<f64>,
    /// Half-width excluded around the peak in Lorentzian fits, Hz.
    pub exclusion_hz: Option<f64>,
    /// Calibration applied to voltage records, rad/V.
    pub rad_per_volt: Option<f64>,
}

impl Default for FitBlock {
    fn default() -> Self {
        Self { segment_length: 1 << 16, overlap: 0.5, half_span_hz: None, exclusion_hz: None, rad_per_volt: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub oscillator: OscillatorBlock,
    pub beam: BeamBlock,
    pub extraneous: ExtraneousNoise,
    pub feedback: FeedbackConfig,
    pub grid: GridBlock,
    pub sim: SimBlock,
    pub calibration: CalibrationBlock,
    pub fit: FitBlock,
}

/// A parsed config together with the digest of its source text.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub sha256: String,
}

fn bad(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn positive(path: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be a finite number > 0 (got {v})")))
    }
}

fn non_negative(path: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be a finite number >= 0 (got {v})")))
    }
}

/// Keys a block accepts, taken from its default serialization.
fn known_keys<T: Serialize + Default>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn block<T: DeserializeOwned + Serialize + Default>(raw: &mut Map<String, Value>, name: &str, required: bool) -> CliResult<T> {
    let Some(v) = raw.remove(name) else {
        return if required { Err(bad(name, "section is missing")) } else { Ok(T::default()) };
    };
    if let Value::Object(m) = &v {
        let known = known_keys::<T>();
        if let Some(k) = m.keys().find(|k| !known.contains(k)) {
            return Err(bad(&format!("{name}.{k}"), "unknown field"));
        }
    } else {
        return Err(bad(name, "must be a table"));
    }
    serde_json::from_value(v).map_err(|e| bad(name, e))
}

impl ScenarioConfig {
    pub fn parse(text: &str, json: bool) -> CliResult<Self> {
        let value: Value = if json {
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?
        } else {
            let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(format!("invalid TOML: {e}")))?;
            serde_json::to_value(table).map_err(|e| CliError::Config(e.to_string()))?
        };
        let Value::Object(mut raw) = value else {
            return Err(CliError::Config("config must be a table of sections".into()));
        };
        let config = Self {
            oscillator: block(&mut raw, "oscillator", true)?,
            beam: block(&mut raw, "beam", false)?,
            extraneous: block(&mut raw, "extraneous", false)?,
            feedback: block(&mut raw, "feedback", false)?,
            grid: block(&mut raw, "grid", false)?,
            sim: block(&mut raw, "sim", false)?,
            calibration: block(&mut raw, "calibration", false)?,
            fit: block(&mut raw, "fit", false)?,
        };
        if let Some(k) = raw.keys().next() {
            return Err(bad(k, "unknown section"));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<LoadedConfig> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Ok(LoadedConfig { config: Self::parse(&text, json)?, sha256: hex::encode(Sha256::digest(&bytes)) })
    }

    pub fn validate(&self) -> CliResult<()> {
        let o = &self.oscillator;
        positive("oscillator.frequency_hz", o.frequency_hz)?;
        positive("oscillator.quality_factor", o.quality_factor)?;
        positive("oscillator.inertia", o.inertia)?;
        non_negative("oscillator.temperature", o.temperature)?;
        let f0 = o.frequency_hz;

        let b = &self.beam;
        positive("beam.wavelength", b.wavelength)?;
        positive("beam.waist_radius", b.waist_radius)?;
        positive("beam.power", b.power)?;
        if !(b.efficiency > 0.0 && b.efficiency <= 1.0) {
            return Err(bad("beam.efficiency", format!("must lie in (0, 1] (got {})", b.efficiency)));
        }
        if !b.gouy_shift.is_finite() || b.gouy_shift.sin().abs() < 1e-12 {
            return Err(bad("beam.gouy_shift", format!("sin(ζ) must be nonzero (got ζ = {})", b.gouy_shift)));
        }
        if let Some(r) = b.responsivity {
            positive("beam.responsivity", r)?;
        }

        self.extraneous.validate().map_err(|e| bad("extraneous", e))?;
        if !self.extraneous.beam_offset.is_finite() {
            return Err(bad("extraneous.beam_offset", "must be finite"));
        }

        let fb = &self.feedback;
        non_negative("feedback.gamma_fb", fb.gamma_fb)?;
        positive("feedback.band_low", fb.band_low)?;
        positive("feedback.band_high", fb.band_high)?;
        if fb.band_high <= fb.band_low {
            return Err(bad("feedback.band_high", format!("must exceed band_low ({} <= {})", fb.band_high, fb.band_low)));
        }
        non_negative("feedback.extra_delay", fb.extra_delay)?;
        fb.validate(&self.oscillator()).map_err(|e| bad("feedback", e))?;

        let g = &self.grid;
        if g.points < 2 {
            return Err(bad("grid.points", format!("must be at least 2 (got {})", g.points)));
        }
        let (lo, hi) = (g.f_min.unwrap_or(0.1 * f0), g.f_max.unwrap_or(10.0 * f0));
        positive("grid.f_min", lo)?;
        positive("grid.f_max", hi)?;
        if hi <= lo {
            return Err(bad("grid.f_max", format!("must exceed grid.f_min ({hi} <= {lo})")));
        }
        non_negative("grid.refine_linewidths", g.refine_linewidths)?;

        let s = &self.sim;
        positive("sim.duration", s.duration)?;
        let fs = self.sample_rate();
        positive("sim.sample_rate", fs)?;
        if fs < MIN_OVERSAMPLING * f0 {
            return Err(bad("sim.sample_rate", format!("must be at least {MIN_OVERSAMPLING} × the resonance ({fs} Hz)")));
        }
        if s.duration * fs < 16.0 || s.duration * fs > 1e9 {
            return Err(bad("sim.duration", format!("gives {} samples; need 16 to 1e9", (s.duration * fs).round())));
        }

        let c = &self.calibration;
        positive("calibration.v_acoustic", c.v_acoustic)?;
        if c.depths.is_empty() {
            return Err(bad("calibration.depths", "needs at least one depth"));
        }
        for (i, d) in c.depths.iter().enumerate() {
            non_negative(&format!("calibration.depths[{i}]"), *d)?;
        }
        positive("calibration.gain", c.gain)?;
        positive("calibration.duration", c.duration)?;
        positive("calibration.sample_rate", c.sample_rate)?;
        positive("calibration.mod_rate", c.mod_rate)?;
        if c.mod_rate >= 0.5 * c.sample_rate {
            return Err(bad("calibration.mod_rate", "must be below half of calibration.sample_rate"));
        }
        non_negative("calibration.noise_std", c.noise_std)?;

        let f = &self.fit;
        if f.segment_length < 16 {
            return Err(bad("fit.segment_length", format!("must be at least 16 (got {})", f.segment_length)));
        }
        if !(0.0..=0.9).contains(&f.overlap) {
            return Err(bad("fit.overlap", format!("must lie in [0, 0.9] (got {})", f.overlap)));
        }
        if let Some(v) = f.half_span_hz {
            positive("fit.half_span_hz", v)?;
        }
        if let Some(v) = f.exclusion_hz {
            non_negative("fit.exclusion_hz", v)?;
        }
        if let Some(v) = f.rad_per_volt {
            positive("fit.rad_per_volt", v)?;
        }
        Ok(())
    }

    pub fn oscillator(&self) -> OscillatorParams {
        let o = &self.oscillator;
        OscillatorParams {
            omega0: TWO_PI * o.frequency_hz,
            quality_factor: o.quality_factor,
            inertia: o.inertia,
            temperature: o.temperature,
        }
    }

    pub fn beam_params(&self) -> BeamParams {
        let b = &self.beam;
        BeamParams {
            wavelength: b.wavelength,
            waist_radius: b.waist_radius,
            power: b.power,
            efficiency: b.efficiency,
            gouy_shift: b.gouy_shift,
            responsivity: b.responsivity.unwrap_or_else(|| ideal_responsivity(b.wavelength)),
        }
    }

    pub fn lever(&self) -> OpticalLever {
        OpticalLever::new(self.beam_params(), self.extraneous.clone(), self.beam.lever)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sim.sample_rate.unwrap_or(MIN_OVERSAMPLING * self.oscillator.frequency_hz)
    }

    /// Analysis grid: log spacing with a linear patch across the resonance,
    /// or plain linear spacing.
    pub fn grid(&self) -> CliResult<FrequencyGrid> {
        let f0 = self.oscillator.frequency_hz;
        let g = &self.grid;
        let (lo, hi) = (g.f_min.unwrap_or(0.1 * f0), g.f_max.unwrap_or(10.0 * f0));
        let grid = match g.spacing {
            Spacing::Linear => FrequencyGrid::linear(lo, hi, g.points),
            Spacing::Log => {
                let hwhm = f0 / (2.0 * self.oscillator.quality_factor);
                FrequencyGrid::log_refined(lo, hi, g.points, f0, g.refine_linewidths * hwhm, (g.points / 4).max(2))
            }
        };
        grid.map_err(|e| bad("grid", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
[oscillator]
frequency_hz = 35950.0
quality_factor = 1.365e7
inertia = 5.54e-17
temperature = 290
"#;

    fn message(r: CliResult<ScenarioConfig>) -> String {
        match r {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let c = ScenarioConfig::parse(MINIMAL, false).unwrap();
        assert_eq!(c.beam, BeamBlock::default());
        assert_eq!(c.grid.points, 4001);
        assert_eq!(c.oscillator().omega0, TWO_PI * 35950.0);
        let grid = c.grid().unwrap();
        assert!(grid.first() > 3594.0 && grid.last() < 359501.0);
    }

    #[test]
    fn json_is_equivalent() {
        let json = r#"{"oscillator": {"frequency_hz": 35950.0, "quality_factor": 1.365e7, "inertia": 5.54e-17, "temperature": 290}}"#;
        assert_eq!(ScenarioConfig::parse(json, true).unwrap(), ScenarioConfig::parse(MINIMAL, false).unwrap());
    }

    #[test]
    fn errors_name_the_field() {
        let m = message(ScenarioConfig::parse(&format!("{MINIMAL}[grid]\npoints = 0\n"), false));
        assert!(m.starts_with("grid.points"), "{m}");
        let m = message(ScenarioConfig::parse(&format!("{MINIMAL}[beam]\npowr = 1.0\n"), false));
        assert!(m.starts_with("beam.powr: unknown field"), "{m}");
        let m = message(ScenarioConfig::parse(&format!("{MINIMAL}[extra]\na = 1\n"), false));
        assert!(m.starts_with("extra: unknown section"), "{m}");
        let m = message(ScenarioConfig::parse("[oscillator]\nfrequency_hz = 1.0\n", false));
        assert!(m.starts_with("oscillator:") && m.contains("quality_factor"), "{m}");
        let m = message(ScenarioConfig::parse(&format!("{MINIMAL}[feedback]\ngamma_fb = -1.0\n"), false));
        assert!(m.starts_with("feedback.gamma_fb"), "{m}");
        let m = message(ScenarioConfig::parse(&format!("{MINIMAL}[beam]\ngouy_shift = 0.0\n"), false));
        assert!(m.starts_with("beam.gouy_shift"), "{m}");
        assert!(matches!(ScenarioConfig::parse("not toml [", false), Err(CliError::Config(_))));
    }

    type Mutation = (&'static str, fn(&mut ScenarioConfig, f64));

    const MUTATIONS: [Mutation; 16] = [
        ("oscillator.frequency_hz", |c, v| c.oscillator.frequency_hz = -v),
        ("oscillator.quality_factor", |c, v| c.oscillator.quality_factor = -v),
        ("oscillator.inertia", |c, _| c.oscillator.inertia = 0.0),
        ("oscillator.temperature", |c, v| c.oscillator.temperature = -v),
        ("beam.wavelength", |c, v| c.beam.wavelength = -v),
        ("beam.power", |c, _| c.beam.power = f64::NAN),
        ("beam.efficiency", |c, v| c.beam.efficiency = 1.0 + v),
        ("beam.gouy_shift", |c, _| c.beam.gouy_shift = 0.0),
        ("feedback.gamma_fb", |c, v| c.feedback.gamma_fb = -v),
        ("feedback.band_high", |c, _| c.feedback.band_high = c.feedback.band_low),
        ("grid.points", |c, v| c.grid.points = (v as usize) % 2),
        ("grid.f_max", |c, _| c.grid.f_max = Some(1.0)),
        ("sim.duration", |c, v| c.sim.duration = -v),
        ("sim.sample_rate", |c, _| c.sim.sample_rate = Some(c.oscillator.frequency_hz)),
        ("calibration.mod_rate", |c, _| c.calibration.mod_rate = c.calibration.sample_rate),
        ("fit.overlap", |c, v| c.fit.overlap = 0.95 + v),
    ];

    proptest! {
        #[test]
        fn every_invalid_field_is_reported_by_path(i in 0..MUTATIONS.len(), v in 1e-3f64..1e3) {
            let mut c = ScenarioConfig::parse(MINIMAL, false).unwrap();
            let (path, mutate) = MUTATIONS[i];
            mutate(&mut c, v);
            match c.validate() {
                Err(CliError::Config(m)) => prop_assert!(m.starts_with(path), "{path}: {m}"),
                other => prop_assert!(false, "{path}: {other:?}"),
            }
        }
    }
}
