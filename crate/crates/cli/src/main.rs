//! `fiberwave`: solves, sweeps, junction tables and checks for fiber-network graphs.

mod check;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fiberwave_core::Error;

#[derive(Parser)]
#[command(name = "fiberwave", version, about = "Scattering on thin-fiber networks through their limiting graphs")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "FIBERWAVE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Network scattering matrix at one spectral parameter.
    Solve(SolveArgs),
    /// Transmission spectrum over an interval, as CSV.
    Sweep(SweepArgs),
    /// Junction matrix of a planar geometry, as a tabulated junction block.
    Junction(JunctionArgs),
    /// Structural validation of a graph file.
    NetworkValidate(ValidateArgs),
    /// Unitarity, flux, gluing-condition and spider checks on a graph.
    Check(CheckArgs),
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Graph JSON file.
    graph: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    eps: f64,
    /// Solve for a single incident wave in this infinite channel.
    #[arg(long, requires = "mode")]
    channel: Option<usize>,
    #[arg(long, requires = "channel")]
    mode: Option<usize>,
    /// Report an ill-conditioned solve instead of failing.
    #[arg(long)]
    allow_flagged: bool,
    /// Reciprocal-condition threshold below which a solve is uncertified.
    #[arg(long, default_value_t = fiberwave_core::solver::RCOND_THRESHOLD)]
    rcond_threshold: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SweepArgs {
    graph: PathBuf,
    #[arg(long)]
    lo: f64,
    #[arg(long)]
    hi: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    eps: f64,
    /// Exit successfully even when some points are flagged.
    #[arg(long)]
    allow_flagged: bool,
    #[arg(long, default_value_t = fiberwave_core::solver::RCOND_THRESHOLD)]
    rcond_threshold: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct JunctionArgs {
    /// Planar geometry JSON file.
    #[arg(long)]
    geometry: PathBuf,
    /// Spectral parameter; repeat for a multi-sample table.
    #[arg(long, required = true)]
    lambda: Vec<f64>,
    /// Grid spacing, overriding the one in the file.
    #[arg(long)]
    h: Option<f64>,
    /// Retained evanescent modes per stub, overriding the file.
    #[arg(long)]
    n_ev: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ValidateArgs {
    graph: PathBuf,
    /// Also print the propagating-mode ordering at this spectral parameter.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    graph: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    eps: f64,
    /// Tolerance for every check in the table.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

/// A failure with the process exit code it maps to.
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_IO: u8 = 4;

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::InvalidGraph(_)
            | Error::GeometryInvalid(_)
            | Error::InvalidParameter(_) => EXIT_INPUT,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_NUMERIC,
        };
        Self::new(code, e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INPUT);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    }
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Junction(a) => commands::junction(a),
        Command::NetworkValidate(a) => commands::network_validate(a),
        Command::Check(a) => check::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
