//! Command-line front end for the wave-branch solver suite.

mod commands;
mod config;
mod document;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{OutputFormat, ProblemKind, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("computation failed: {0}")]
    Compute(#[from] wavebranch::Error),
    #[error("verification failed: {0} check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Spectral solvers and branch continuation for steady periodic
/// gravity-wave integral equations.
#[derive(Parser)]
#[command(name = "wavebranch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic-value table with bifurcation flags.
    Spectrum(CommonArgs),
    /// Small-amplitude branch series with the residual-order sweep.
    Series(CommonArgs),
    /// Series vs reduced branching-equation cross-check.
    Branching(CommonArgs),
    /// Pseudo-arclength branch continuation with diagnostics.
    #[command(name = "continue")]
    Continue(CommonArgs),
    /// Full verification battery.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Problem selection.
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Branch mode (or spectrum row count).
    #[arg(long)]
    n: Option<usize>,
    /// Series truncation order K.
    #[arg(long)]
    order: Option<usize>,
    /// Fluid depth h (finite-depth problem; requires --wavelength).
    #[arg(long)]
    depth: Option<f64>,
    /// Wavelength L (finite-depth problem; requires --depth).
    #[arg(long)]
    wavelength: Option<f64>,
    /// Continuation step budget.
    #[arg(long)]
    steps: Option<usize>,
    /// Output formats, comma-separated.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<OutputFormat>>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.problem {
            cfg.problem = v;
        }
        if let Some(v) = self.n {
            cfg.mode = v;
        }
        if let Some(v) = self.order {
            cfg.order = v;
        }
        if let Some(v) = self.depth {
            cfg.depth = Some(v);
        }
        if let Some(v) = self.wavelength {
            cfg.wavelength = Some(v);
        }
        if let Some(v) = self.steps {
            cfg.continuation.max_steps = v;
        }
        if let Some(v) = &self.format {
            cfg.formats = v.clone();
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(a) => commands::cmd_spectrum(a.resolve()?),
        Command::Series(a) => commands::cmd_series(a.resolve()?),
        Command::Branching(a) => commands::cmd_branching(a.resolve()?),
        Command::Continue(a) => commands::cmd_continue(a.resolve()?),
        Command::Verify(a) => commands::cmd_verify(a.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
