use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod analytic;
mod config;
mod lhv;
mod simulate;
mod waveform;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "bellsim", version, about = "Local-realist optical Bell test toolkit")]
struct Cli {
    /// Seed for every random stream of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form CH over a k grid, as CSV.
    Analytic(analytic::Args),
    /// Monte Carlo run compared against its closed form, as JSON.
    Simulate(simulate::Args),
    /// Waveform intensity statistics and detection-time demonstrations.
    #[command(subcommand)]
    Waveform(waveform::Command),
    /// CH over random local hidden-variable models.
    LhvCheck(lhv::Args),
}

/// A failed command and its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }

    pub fn comparison(message: impl Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<bellsim_core::Error> for Failure {
    fn from(e: bellsim_core::Error) -> Self {
        Self::config(e)
    }
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::config(format!("cannot write output: {e}")))
        }
    }
}

/// Shortest round-trip decimal in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn out_path(p: &Option<PathBuf>) -> Option<&Path> {
    p.as_deref()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Analytic(args) => analytic::run(args, cli.seed),
        Command::Simulate(args) => simulate::run(args, cli.seed),
        Command::Waveform(cmd) => waveform::run(cmd, cli.seed),
        Command::LhvCheck(args) => lhv::run(args, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
