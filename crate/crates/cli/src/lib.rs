//! Command-line driver for `nschsim-core`.
//!
//! ```text
//! nschsim simulate --config run.toml --set time.t_end=10 --probe-window 1
//! nschsim steady   --mu-s 0 --init const --tol 1e-10
//! nschsim verify   --case homogeneous
//! nschsim sweep    --axis time.dt --values 4e-3,2e-3,1e-3
//! nschsim degiorgi --m 2
//! ```
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 failed
//! verification.

pub mod commands;
pub mod config;
pub mod error;
pub mod init;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::steady::GuessSource;
use crate::commands::sweep::Axis;
use crate::commands::verify::Case;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nschsim", version, about = "Viscous Cahn-Hilliard simulator with a logarithmic potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; every key has a default.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set time.dt=5e-4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(self.config.as_deref(), &self.set)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run to time.t_end, writing diagnostics.csv and snapshots.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write omega_probe.csv over the last W time units.
        #[arg(long, value_name = "W")]
        probe_window: Option<f64>,
    },
    /// Solve the steady problem for a constant chemical potential.
    Steady {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu_s: f64,
        #[arg(long, value_enum, default_value = "const")]
        init: GuessSource,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Check the solver against a known answer.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        case: Case,
    },
    /// One run per value of a config key.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated; time.tau also takes `4dt`.
        #[arg(long)]
        values: String,
    },
    /// Level-set diagnostic for the sup bound on mu.
    Degiorgi {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 60)]
        j_max: usize,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { common, probe_window } => commands::simulate::run(&common.load()?, probe_window),
        Command::Steady { common, mu_s, init, tol } => commands::steady::run(&common.load()?, mu_s, init, tol),
        Command::Verify { common, case } => commands::verify::run(&common.load()?, case),
        Command::Sweep { common, axis, values } => commands::sweep::run(&common.load()?, axis, &values),
        Command::Degiorgi { common, m, j_max } => commands::degiorgi::run(&common.load()?, m, j_max),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nschsim: {e}");
            e.exit_code()
        }
    }
}
