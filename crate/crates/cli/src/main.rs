//! `harvester`: evaluate, sweep, simulate and compare vibration energy harvesters.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harvester_core::model::Acceleration;

use crate::commands::{SweepKind, SweepMethod};
use crate::config::AccelTag;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "harvester", version, about = "Resonant electromagnetic vibration harvester models")]
struct Cli {
    /// Config file (TOML). The bundled device data is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Scenario name; optional when the config defines exactly one.
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Override the scenario's acceleration convention.
    #[arg(long, global = true, value_enum)]
    accel_tag: Option<AccelTag>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form steady-state report for a scenario.
    Model,
    /// Frequency or load sweep as CSV.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
        #[arg(long, value_enum, default_value = "model")]
        method: SweepMethod,
    },
    /// Transient simulation; `--out` receives the trace CSV.
    Simulate,
    /// Beam resonant frequency table (thickness by material) as CSV.
    Beam,
    /// Rank catalog devices by acceleration-normalised power density.
    Compare {
        /// Target acceleration in m/s^2.
        #[arg(long, default_value_t = 3.0)]
        target_accel: f64,
    },
    /// Half-power Q of a frequency-sweep CSV, or optimum of a load-sweep CSV.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Response column used for Q extraction.
        #[arg(long, default_value = "emf_rms_v")]
        column: String,
        /// Sweep excitation level in m/s^2 (recorded with the curve).
        #[arg(long, default_value_t = 1.0)]
        accel: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Analyze { input, column, accel } => {
            let tag = cli.accel_tag.unwrap_or(AccelTag::Rms);
            let a = Acceleration::new(accel, tag.into()).map_err(|e| CliError::Config(e.to_string()))?;
            output::emit(&commands::analyze(&input, &column, a)?, out)?;
        }
        Command::Compare { target_accel } => {
            let cfg = config::load(cli.config.as_deref())?;
            output::emit(&commands::compare(&cfg, target_accel)?, out)?;
        }
        Command::Beam => {
            let cfg = config::load(cli.config.as_deref())?;
            output::emit(&commands::beam(&cfg)?, out)?;
        }
        Command::Model => {
            let cfg = config::load(cli.config.as_deref())?;
            let s = cfg.resolve(cli.scenario.as_deref(), cli.accel_tag)?;
            output::emit(&commands::model(&s)?, out)?;
        }
        Command::Sweep { kind, method } => {
            let cfg = config::load(cli.config.as_deref())?;
            let s = cfg.resolve(cli.scenario.as_deref(), cli.accel_tag)?;
            output::emit(&commands::sweep(&s, kind, method)?, out)?;
        }
        Command::Simulate => {
            let cfg = config::load(cli.config.as_deref())?;
            let s = cfg.resolve(cli.scenario.as_deref(), cli.accel_tag)?;
            let (report, trace) = commands::simulate_scenario(&s)?;
            output::emit(&report, None)?;
            if let (Some(path), Some(trace)) = (out, trace) {
                output::emit(&trace, Some(path))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harvester: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
