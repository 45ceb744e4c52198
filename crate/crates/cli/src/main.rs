//! `torquill`: noise budgets, cooling sweeps, simulations and fits from a
//! scenario file.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{CalibrationKind, FitModel, RingdownArgs};
use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Output, RecordFormat};

#[derive(Parser)]
#[command(name = "torquill", version, about = "Torsional-oscillator noise, feedback cooling and calibration toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if needed.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides sim.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Itemized observed-angle noise budget (CSV) and resonance summary (JSON).
    Budget {
        #[command(flatten)]
        common: Common,
        /// Probe powers in W; one budget per power.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        power_sweep: Vec<f64>,
    },
    /// Occupancy against feedback damping, with the analytic optimum.
    Cool {
        #[command(flatten)]
        common: Common,
        /// Feedback damping rates Γ_fb in rad/s.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gains: Vec<f64>,
    },
    /// Closed-loop time-domain simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "bin")]
        format: RecordFormat,
    },
    /// Ringdown simulation (or recorded decay), lock-in envelope and Q fit.
    Ringdown {
        #[command(flatten)]
        common: Common,
        /// Recorded free decay to analyse instead of simulating one.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Initial angle amplitude, rad.
        #[arg(long, default_value_t = 1e-6)]
        amplitude: f64,
        /// White noise as a fraction of the initial amplitude.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Lock-in bandwidth, Hz.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, value_enum, default_value = "bin")]
        format: RecordFormat,
    },
    /// Volts-to-radians calibration.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "aod")]
        method: CalibrationKind,
        /// Recorded tone (aod) or voltage record (thermal).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Spectral fit of a recorded series.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "lorentzian")]
        model: FitModel,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("TORQUILL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("TORQUILL_THREADS: expected a positive integer (got {v:?})")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("TORQUILL_THREADS: {e}")))
}

fn prepare(common: &Common, name: &str) -> CliResult<(config::LoadedConfig, Output, u64)> {
    let loaded = ScenarioConfig::load(&common.config)?;
    let seed = common.seed.unwrap_or(loaded.config.sim.seed);
    let out = Output::new(&common.out, name, &loaded.sha256, Some(seed))?;
    Ok((loaded, out, seed))
}

fn run(cli: Cli) -> CliResult<Output> {
    configure_threads()?;
    match cli.command {
        Command::Budget { common, power_sweep } => {
            let (cfg, mut out, _) = prepare(&common, "budget")?;
            commands::budget(&cfg, &mut out, &power_sweep)?;
            Ok(out)
        }
        Command::Cool { common, gains } => {
            let (cfg, mut out, _) = prepare(&common, "cool")?;
            commands::cool(&cfg, &mut out, &gains)?;
            Ok(out)
        }
        Command::Simulate { common, format } => {
            let (cfg, mut out, seed) = prepare(&common, "simulate")?;
            commands::simulate(&cfg, &mut out, seed, format)?;
            Ok(out)
        }
        Command::Ringdown { common, input, amplitude, noise, bandwidth, format } => {
            let (cfg, mut out, seed) = prepare(&common, "ringdown")?;
            let args = RingdownArgs { input: input.as_deref(), amplitude, noise, bandwidth, format };
            commands::ringdown(&cfg, &mut out, seed, args)?;
            Ok(out)
        }
        Command::Calibrate { common, method, input } => {
            let (cfg, mut out, seed) = prepare(&common, "calibrate")?;
            commands::calibrate(&cfg, &mut out, seed, method, input.as_deref())?;
            Ok(out)
        }
        Command::Fit { common, input, model } => {
            let (cfg, mut out, _) = prepare(&common, "fit")?;
            commands::fit(&cfg, &mut out, &input, model)?;
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            for p in out.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("torquill: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
