use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesUnit {
    Rad,
    Volt,
    Ampere,
    Metre,
    Newton,
    NewtonMetre,
    Dimensionless,
}

impl SeriesUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Rad => "rad",
            Self::Volt => "V",
            Self::Ampere => "A",
            Self::Metre => "m",
            Self::Newton => "N",
            Self::NewtonMetre => "N m",
            Self::Dimensionless => "1",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        [Self::Rad, Self::Volt, Self::Ampere, Self::Metre, Self::Newton, Self::NewtonMetre, Self::Dimensionless]
            .into_iter()
            .find(|u| u.symbol() == s)
    }
}

/// Uniformly sampled real record.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    sample_rate: f64,
    samples: Vec<f64>,
    unit: SeriesUnit,
    seed: Option<u64>,
    generator: Option<String>,
}

/// JSON sidecar of the binary container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub sample_rate: f64,
    pub unit: SeriesUnit,
    pub seed: Option<u64>,
    pub generator: Option<String>,
    pub len: usize,
    /// Always "f64-le".
    pub encoding: String,
}

const ENCODING: &str = "f64-le";

impl TimeSeries {
    pub fn new(sample_rate: f64, samples: Vec<f64>, unit: SeriesUnit) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Domain(format!("sample_rate must be > 0 (got {sample_rate})")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self { sample_rate, samples, unit, seed: None, generator: None })
    }

    pub fn with_provenance(mut self, seed: u64, generator: impl Into<String>) -> Self {
        self.seed = Some(seed);
        self.generator = Some(generator.into());
        self
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn unit(&self) -> SeriesUnit {
        self.unit
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn generator(&self) -> Option<&str> {
        self.generator.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    /// Same record with different values; keeps rate, unit and provenance.
    pub fn map_samples(&self, samples: Vec<f64>, unit: SeriesUnit) -> Result<Self> {
        let mut out = Self::new(self.sample_rate, samples, unit)?;
        out.seed = self.seed;
        out.generator = self.generator.clone();
        Ok(out)
    }

    pub fn scaled(&self, factor: f64, unit: SeriesUnit) -> Result<Self> {
        self.map_samples(self.samples.iter().map(|v| v * factor).collect(), unit)
    }

    /// Samples `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start.checked_add(len).filter(|&e| e <= self.len());
        let end = end.ok_or_else(|| Error::Domain(format!("slice {start}+{len} exceeds {} samples", self.len())))?;
        self.map_samples(self.samples[start..end].to_vec(), self.unit)
    }

    pub fn metadata(&self) -> SeriesMetadata {
        SeriesMetadata {
            sample_rate: self.sample_rate,
            unit: self.unit,
            seed: self.seed,
            generator: self.generator.clone(),
            len: self.len(),
            encoding: ENCODING.into(),
        }
    }

    /// CSV with a `time (s),value (<unit>)` header. Values use the shortest
    /// representation that parses back to the same double.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "time (s),value ({})", self.unit.symbol())?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(w, "{},{:e}", self.time(i), v)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`TimeSeries::write_csv`]. The sample
    /// rate comes from the first time step.
    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))??;
        let unit = header
            .split_once("value (")
            .and_then(|(_, rest)| rest.strip_suffix(')'))
            .and_then(SeriesUnit::from_symbol)
            .ok_or_else(|| Error::Format(format!("unrecognized CSV header {header:?}")))?;
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: expected time,value", n + 2)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))
            };
            times.push(parse(t)?);
            samples.push(parse(v)?);
        }
        if times.len() < 2 {
            return Err(Error::Format("CSV needs at least two samples".into()));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::Format("CSV time column must increase".into()));
        }
        Self::new(1.0 / dt, samples, unit)
    }

    /// Path of the JSON sidecar that goes with a binary container.
    pub fn sidecar_path(data: &Path) -> PathBuf {
        let mut name = data.as_os_str().to_owned();
        name.push(".json");
        PathBuf::from(name)
    }

    pub fn write_binary(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        for v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_binary(bytes: &[u8], meta: &SeriesMetadata) -> Result<Self> {
        if meta.encoding != ENCODING {
            return Err(Error::Format(format!("unsupported encoding {:?}", meta.encoding)));
        }
        if bytes.len() != 8 * meta.len {
            return Err(Error::Format(format!("expected {} bytes, found {}", 8 * meta.len, bytes.len())));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut ts = Self::new(meta.sample_rate, samples, meta.unit)?;
        ts.seed = meta.seed;
        ts.generator = meta.generator.clone();
        Ok(ts)
    }

    /// Writes `path` (raw samples) and `path.json` (metadata).
    pub fn save_binary(&self, path: &Path) -> Result<()> {
        self.write_binary(fs::File::create(path)?)?;
        let meta = serde_json::to_string_pretty(&self.metadata()).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(Self::sidecar_path(path), meta)?;
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let meta = fs::read_to_string(Self::sidecar_path(path))?;
        let meta: SeriesMetadata = serde_json::from_str(&meta).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_binary(&fs::read(path)?, &meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> TimeSeries {
        TimeSeries::new(1e3, vec![0.1, -2.5e-13, 1.0 / 3.0, 7.0], SeriesUnit::Rad)
            .unwrap()
            .with_provenance(42, "test")
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TimeSeries::new(0.0, vec![1.0], SeriesUnit::Volt).is_err());
        assert!(TimeSeries::new(1.0, vec![f64::NAN], SeriesUnit::Volt).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ts = series();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time (s),value (rad)\n"));
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), ts.samples());
        assert!((back.sample_rate() - 1e3).abs() < 1e-9);
        assert!(TimeSeries::read_csv("nonsense\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn binary_round_trip_keeps_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.bin");
        let ts = series();
        ts.save_binary(&path).unwrap();
        assert!(TimeSeries::sidecar_path(&path).exists());
        let back = TimeSeries::load_binary(&path).unwrap();
        assert_eq!(back, ts);
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let ts = series();
        let mut buf = Vec::new();
        ts.write_binary(&mut buf).unwrap();
        assert!(TimeSeries::from_binary(&buf[..buf.len() - 1], &ts.metadata()).is_err());
    }

    #[test]
    fn statistics_and_slices() {
        let ts = TimeSeries::new(2.0, vec![1.0, 3.0, 1.0, 3.0], SeriesUnit::Volt).unwrap();
        assert_eq!(ts.mean(), 2.0);
        assert_eq!(ts.variance(), 1.0);
        assert_eq!(ts.duration(), 2.0);
        assert_eq!(ts.slice(1, 2).unwrap().samples(), &[3.0, 1.0]);
        assert!(ts.slice(3, 2).is_err());
    }
}
