//! `wavelab` command line: run scenarios, compare models, print dispersion
//! tables and reconstruct vertical profiles from stored runs.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 for numerical failure,
//! 1 for filesystem errors.
//! Errors are written to stderr as one JSON object.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::DispersionArgs;
use crate::config::ScenarioConfig;
use crate::error::Result;

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Shallow-water model hierarchy runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every model of a scenario file; outputs go under $WAVELAB_OUT
    Run {
        config: PathBuf,
        /// override a config key, e.g. --set params.mu=0.05
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the models and tabulate the gaps of the [compare] pairs
    Compare {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print c^2 of a model against the water-wave value as CSV
    Dispersion {
        /// water_waves, nsw, sgn, ik, kdv, bbm, kdv_bbm, whitham, abcd, multilayer
        model: String,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        kmax: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        /// parameter of kdv_bbm
        #[arg(long)]
        p: Option<f64>,
        /// a,b,c,d of abcd
        #[arg(long, value_delimiter = ',')]
        abcd: Option<Vec<f64>>,
        /// layer fractions of multilayer
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<f64>>,
    },
    /// Velocity and pressure profiles of one column of a stored run
    Reconstruct {
        /// run directory (the one holding manifest.json)
        run: PathBuf,
        #[arg(long)]
        x: f64,
        /// nearest stored output time is used
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 11)]
        nz: usize,
        /// add the zero-mean shear of a constant vorticity
        #[arg(long)]
        omega0: Option<f64>,
    },
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

fn execute(cmd: Command) -> Result<String> {
    match cmd {
        Command::Run { config, set } => {
            let cfg = ScenarioConfig::load(&config, &set)?;
            Ok(pretty(&commands::run(&cfg, &output::output_root())?))
        }
        Command::Compare { config, set } => {
            let cfg = ScenarioConfig::load(&config, &set)?;
            Ok(pretty(&commands::compare(&cfg, &output::output_root())?))
        }
        Command::Dispersion { model, mu, kmax, samples, p, abcd, layers } => {
            commands::dispersion(&model, mu, kmax, samples, &DispersionArgs { p, abcd, layers })
        }
        Command::Reconstruct { run, x, time, nz, omega0 } => Ok(pretty(&commands::reconstruct(&run, x, time, nz, omega0)?)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(mut text) => {
            if !text.ends_with('\n') {
                text.push('\n');
            }
            // a closed pipe (`| head`) is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
