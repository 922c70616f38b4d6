//! `fracadi`: convergence studies, stability checks and solver runs for
//! space-fractional convection–diffusion problems.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommandName, Options, RunConfig, Settings};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fracadi", version, about = "Space-fractional convection-diffusion solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the spline coefficient rows p and q.
    Coeffs(Options),
    /// Operator truncation study for the operator-test problems.
    OperatorTest(Options),
    /// Crank-Nicolson solve of a 1D registry problem.
    Solve1d(Options),
    /// ADI solve of a 2D registry problem.
    Solve2d(Options),
    /// Convergence study: error and observed order per grid size.
    Converge(Options),
    /// Amplification-factor sweeps over the stability lattice.
    Stability(Options),
    /// Coefficient audit over (alpha, N).
    Audit(Options),
}

impl Command {
    fn split(self) -> (CommandName, Options) {
        match self {
            Command::Coeffs(o) => (CommandName::Coeffs, o),
            Command::OperatorTest(o) => (CommandName::OperatorTest, o),
            Command::Solve1d(o) => (CommandName::Solve1d, o),
            Command::Solve2d(o) => (CommandName::Solve2d, o),
            Command::Converge(o) => (CommandName::Converge, o),
            Command::Stability(o) => (CommandName::Stability, o),
            Command::Audit(o) => (CommandName::Audit, o),
        }
    }
}

fn execute(command: CommandName, opts: &Options) -> Result<(), CliError> {
    let file = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let merged = opts.to_config(command).over(file);
    if let Some(path) = &opts.save_config {
        let text = serde_json::to_string_pretty(&merged).expect("serializable config");
        output::write_file(path, &(text + "\n"))?;
    }
    let settings = Settings::resolve(&merged)?;
    with_threads(settings.threads, || commands::run(&settings))?
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {k} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(_threads: Option<usize>, f: impl FnOnce() -> T) -> Result<T, CliError> {
    Ok(f())
}

fn main() -> ExitCode {
    let (command, opts) = Cli::parse().command.split();
    match execute(command, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracadi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
