mod commands;
mod config;
mod output;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Globals, StateSource};

#[derive(Parser, Debug)]
#[command(name = "nems-squeeze", version, about = "Squeezing a nanomechanical resonator with a SQUID-coupled charge qubit")]
struct Cli {
    /// INI run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Fill unspecified inputs with the reference parameter set.
    #[arg(long, global = true)]
    paper_defaults: bool,
    /// Base seed for shot sampling; overrides `[sim] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bias classification, couplings and control fields of the device.
    DeviceReport,
    /// Closed-system spin-echo squeezing from the vacuum.
    SqueezeIdeal,
    /// Squeezing under resonator and qubit decoherence.
    SqueezeLindblad,
    /// Minimum uncertainty against the qubit dephasing rate.
    SweepDephasing {
        /// Comma-separated dephasing rates in units of λ.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
    },
    /// Generating-function readout and moment extraction.
    Measure {
        /// vacuum, thermal, squeezed:<kappa> or from-run:<dir>
        #[arg(long, default_value = "vacuum")]
        state: StateSource,
    },
    /// Exact rotating frame against the rotating-wave approximation.
    RwaCheck,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let globals = Globals {
        config: cli.config,
        paper_defaults: cli.paper_defaults,
        seed: cli.seed,
        out: cli.out,
        workers: cli.workers,
    };
    let result: Result<(), CliError> = match &cli.command {
        Command::DeviceReport => commands::run(&globals, "device-report", commands::device_report),
        Command::SqueezeIdeal => commands::run(&globals, "squeeze-ideal", commands::squeeze_ideal),
        Command::SqueezeLindblad => {
            commands::run(&globals, "squeeze-lindblad", commands::squeeze_lindblad)
        }
        Command::SweepDephasing { rates } => commands::run(&globals, "sweep-dephasing", |s| {
            commands::sweep_dephasing(s, rates.clone())
        }),
        Command::Measure { state } => {
            commands::run(&globals, "measure", |s| commands::measure(s, state))
        }
        Command::RwaCheck => commands::run(&globals, "rwa-check", commands::rwa_check),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nems-squeeze: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
