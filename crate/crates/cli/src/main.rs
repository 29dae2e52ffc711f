use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::Params;

/// Fractional stochastic heat equation blow-up lab.
///
/// Exit codes: 0 success, 1 a checked property failed, 2 invalid
/// configuration or unusable input/output, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "fracblow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set alpha=1.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Directory for CSV artifacts. Without it the main CSV goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Switch the noise off.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Master seed, overriding the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stable-kernel property suite for one alpha.
    KernelCheck,
    /// Blow-up ODE: classification, closed form and numeric integration.
    Ode,
    /// One SPDE path with snapshots.
    Simulate,
    /// Monte Carlo moments, functionals, Liapounov exponents and detection.
    Ensemble,
    /// Blow-up phase diagram over (alpha, excess, kappa).
    Phase,
    /// Run the acceptance criteria.
    Verify {
        /// Comma-separated criterion numbers; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

pub enum Failure {
    Property(String),
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Property(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Property(m) | Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<fracblow::Error> for Failure {
    fn from(e: fracblow::Error) -> Self {
        use fracblow::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter { .. }
            | E::GridMismatch { .. }
            | E::PeakAboveOne { .. }
            | E::Format(_)
            | E::Csv(_)
            | E::Io(_) => Failure::Config(msg),
            E::Quadrature { .. }
            | E::Truncation { .. }
            | E::NegativeDensity { .. }
            | E::StepUnderflow { .. }
            | E::Censored(_) => Failure::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

fn params(cli: &Cli) -> Result<Params, Failure> {
    let mut p = match &cli.config {
        Some(path) => Params::load(path)?,
        None => Params::default(),
    };
    for pair in &cli.set {
        p.set(pair)?;
    }
    if let Some(seed) = cli.seed {
        p.insert("seed", seed.to_string());
    }
    if cli.deterministic {
        p.remove_prefix("diffusion.");
        p.insert("diffusion.kind", "zero".into());
    }
    Ok(p)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut p = params(cli)?;
    let out = commands::Output::new(cli.out.clone())?;
    match &cli.command {
        Command::KernelCheck => commands::kernel_check(&mut p, &out),
        Command::Ode => commands::ode(&mut p, &out),
        Command::Simulate => commands::simulate(&mut p, &out),
        Command::Ensemble => commands::ensemble(&mut p, &out),
        Command::Phase => commands::phase(&mut p, &out),
        Command::Verify { only } => commands::verify(&mut p, &out, only),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
