//! `dpistab` drives the stability analyses as reproducible runs: every
//! subcommand writes deterministic CSV/JSON data files plus a run manifest
//! into the output directory.

mod commands;
mod support;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::support::AppError;

#[derive(Parser)]
#[command(name = "dpistab", version, about = "Nonlinear stability analysis of discrete Picard iteration")]
struct Cli {
    /// Directory receiving data files and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Explicit,
    Implicit,
}

#[derive(Subcommand)]
enum Command {
    /// Stability border (explicit) or instability gap (implicit) over an
    /// amplitude range.
    Border(BorderArgs),
    /// Paired analytic/empirical verdicts over an (r, eps_hat) grid.
    Scan(ScanArgs),
    /// Perturbation amplitudes against their closed forms.
    Amplitudes(AmplitudeArgs),
    /// The nonlinear Poisson run, single CFL number or bound sweep.
    Poisson(PoissonArgs),
    /// Fourier-symbol stability test over a frequency grid.
    Fourier(FourierArgs),
}

#[derive(Args)]
struct BorderArgs {
    /// Amplitude values, `start:stop:step` or a single number.
    #[arg(long = "eps-hat")]
    eps_hat: String,
    /// Nonlinearity degree.
    #[arg(long, default_value_t = 1)]
    z: u32,
    #[arg(long, value_enum, default_value = "explicit")]
    scheme: SchemeArg,
}

#[derive(Args)]
struct ScanArgs {
    /// r axis, `start:stop:step` or a single number.
    #[arg(long)]
    r: String,
    /// eps_hat axis, `start:stop:step` or a single number.
    #[arg(long = "eps-hat")]
    eps_hat: String,
    #[arg(long, default_value_t = 1)]
    z: u32,
    #[arg(long, value_enum, default_value = "explicit")]
    scheme: SchemeArg,
    /// Initial condition of every trajectory.
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    /// Iteration budget per cell (default from DPISTAB_MAX_ITER or 100000).
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct AmplitudeArgs {
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    #[arg(long, default_value_t = 1)]
    z: u32,
    /// Highest perturbation order tabulated.
    #[arg(long, default_value_t = 8)]
    order: usize,
    /// Cascade iterations (explicit scheme).
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, value_enum, default_value = "explicit")]
    scheme: SchemeArg,
}

#[derive(Args)]
struct PoissonArgs {
    /// Interior grid points.
    #[arg(long, conflicts_with = "config")]
    m: Option<usize>,
    /// CFL number for a single run.
    #[arg(long, conflicts_with = "sweep")]
    beta: Option<f64>,
    /// Bisect the analytic and experimental CFL bounds instead of running
    /// a single CFL number.
    #[arg(long)]
    sweep: bool,
    /// Replace the nonlinear residual u + u^2 with u alone.
    #[arg(long)]
    linear_residual: bool,
    /// Iteration budget (default from DPISTAB_MAX_ITER or 100000).
    #[arg(long)]
    max_iter: Option<usize>,
    /// JSON run configuration {"M": .., "beta": .., "max_iter": ..}.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FourierArgs {
    /// Operator term `l,m,coeff` (dimension index, derivative order,
    /// coefficient); repeat per term.
    #[arg(long = "coeff", required = true)]
    coeffs: Vec<String>,
    /// Frequency range per dimension, `start:stop:step`; repeat per
    /// dimension in order.
    #[arg(long = "eta", required = true)]
    etas: Vec<String>,
    #[arg(long = "eps-hat", default_value_t = 0.0)]
    eps_hat: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Border(args) => commands::run_border(&cli.output_dir, &args),
        Command::Scan(args) => commands::run_scan(&cli.output_dir, &args),
        Command::Amplitudes(args) => commands::run_amplitudes(&cli.output_dir, &args),
        Command::Poisson(args) => commands::run_poisson(&cli.output_dir, &args),
        Command::Fourier(args) => commands::run_fourier(&cli.output_dir, &args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
