use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tempfile::NamedTempFile;
use torquill_core::sim::TimeSeries;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RecordFormat {
    /// Raw little-endian f64 with a JSON sidecar.
    Bin,
    Csv,
}

/// Where outputs go and what every report records about its origin.
pub struct Output {
    dir: PathBuf,
    provenance: Value,
    written: Vec<PathBuf>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn new(dir: &Path, command: &str, config_sha256: &str, seed: Option<u64>) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance: json!({
                "toolkit": "torquill",
                "version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "config_sha256": config_sha256,
                "seed": seed,
            }),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` through a temporary file in the same directory, then
    /// renames it into place.
    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let tmp = NamedTempFile::new_in(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush().map_err(|e| io_err(&path, e))?;
        }
        tmp.persist(&path).map_err(|e| io_err(&path, e.error))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// JSON report with the provenance block added under `"provenance"`.
    pub fn report(&mut self, name: &str, report: &impl Serialize) -> CliResult<PathBuf> {
        let mut value = serde_json::to_value(report).map_err(|e| CliError::Numerical(e.to_string()))?;
        if let Value::Object(m) = &mut value {
            m.insert("provenance".into(), self.provenance.clone());
        }
        let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write(name, |w| Ok(writeln!(w, "{text}")?))
    }

    /// CSV with `header` and one row per entry of `rows`.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<PathBuf> {
        self.write(name, |w| {
            writeln!(w, "{}", header.join(","))?;
            for row in rows {
                writeln!(w, "{}", row.join(","))?;
            }
            Ok(())
        })
    }

    /// `stem.bin` + `stem.bin.json`, or `stem.csv`.
    pub fn record(&mut self, stem: &str, ts: &TimeSeries, format: RecordFormat) -> CliResult<PathBuf> {
        match format {
            RecordFormat::Csv => self.write(&format!("{stem}.csv"), |w| Ok(ts.write_csv(w)?)),
            RecordFormat::Bin => {
                let name = format!("{stem}.bin");
                let meta = serde_json::to_string_pretty(&ts.metadata()).map_err(|e| CliError::Numerical(e.to_string()))?;
                let path = self.write(&name, |w| Ok(ts.write_binary(w)?))?;
                let sidecar = TimeSeries::sidecar_path(&path);
                let sidecar_name = sidecar.file_name().and_then(|n| n.to_str()).unwrap_or("record.json").to_string();
                self.write(&sidecar_name, |w| Ok(writeln!(w, "{meta}")?))?;
                Ok(path)
            }
        }
    }
}

/// Reads a record written by [`Output::record`]: CSV by extension,
/// otherwise binary with its sidecar.
pub fn read_record(path: &Path) -> CliResult<TimeSeries> {
    if !path.exists() {
        return Err(io_err(path, "no such file"));
    }
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let ts = if is_csv {
        TimeSeries::read_csv(fs::File::open(path).map_err(|e| io_err(path, e))?)
    } else {
        TimeSeries::load_binary(path)
    };
    ts.map_err(|e| io_err(path, e))
}
