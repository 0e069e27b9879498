use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

/// Conjugacy invariants of convex billiard tables.
#[derive(Debug, Parser)]
#[command(name = "billiards", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample β(1/q), fit the normalized β-function and the Marvizi–Melrose coefficients.
    Beta(SweepArgs),
    /// Tabulate L_q and l_q and fit the Marvizi–Melrose coefficients.
    Mm(SweepArgs),
    /// Compare two tables: normalized coefficients and the invariant ratio law.
    Compare(PairSweepArgs),
    /// Verify the action-angle conjugacy between two elliptic tables on a grid.
    Conjugacy(ConjugacyArgs),
    /// Find a rotation number distinguishing two ellipses by hyperbolic-caustic orbits.
    Witness(PairArgs),
    /// Export periodic orbits and, optionally, a trajectory.
    Orbit(OrbitArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SweepArgs {
    /// Table description (JSON).
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 10)]
    qmin: u32,
    #[arg(long, default_value_t = 120)]
    qmax: u32,
    /// Number of fitted coefficients beyond the leading one.
    #[arg(long = "K", default_value_t = 3)]
    k: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PairSweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sweep: SweepArgs,
    /// Second table description (JSON).
    #[arg(long)]
    table2: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PairArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    table2: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ConjugacyArgs {
    /// Target ellipse E1.
    #[arg(long)]
    table: PathBuf,
    /// Source ellipse E2; the conjugacy maps its phase space to that of E1.
    #[arg(long)]
    table2: PathBuf,
    /// Grid size `NSxNTHETA` over arc length and incidence angle.
    #[arg(long, default_value = "200x50")]
    grid: String,
    /// Distance kept from θ = 0 and θ = θ*.
    #[arg(long, default_value_t = 0.01)]
    margin: f64,
    /// Exit with status 4 when the largest residual exceeds this.
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ClassArg {
    Max,
    Min,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
struct OrbitArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 1)]
    p: u32,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long, value_enum, default_value_t = ClassArg::Both)]
    class: ClassArg,
    /// Launch a trajectory from arc length S and incidence angle THETA.
    #[arg(long, num_args = 2, value_names = ["S", "THETA"], allow_negative_numbers = true)]
    launch: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

/// A failed run, carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input: status 1.
    Input(anyhow::Error),
    /// Ill-conditioned fit: status 2.
    Fit(anyhow::Error),
    /// A solver did not converge: status 3.
    Solver(anyhow::Error),
    /// A verification exceeded its threshold: status 4.
    Threshold(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Fit(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Threshold(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Input(e) | Failure::Fit(e) | Failure::Solver(e) => format!("{e:#}"),
            Failure::Threshold(m) => m.clone(),
        }
    }
}

impl From<billiards_core::Error> for Failure {
    fn from(e: billiards_core::Error) -> Self {
        use billiards_core::Error as E;
        match e {
            E::Config(_) | E::NotConvex(_) => Failure::Input(e.into()),
            E::IllConditioned { .. } => Failure::Fit(e.into()),
            _ => Failure::Solver(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("BILLIARDS_LOG", "warn");
    env_logger::Builder::from_env(env).init();
}

fn out_dir(command: &Command) -> &Path {
    match command {
        Command::Beta(a) | Command::Mm(a) => &a.common.out,
        Command::Compare(a) => &a.sweep.common.out,
        Command::Conjugacy(a) => &a.common.out,
        Command::Witness(a) => &a.common.out,
        Command::Orbit(a) => &a.common.out,
    }
}

fn threads(command: &Command) -> Option<usize> {
    match command {
        Command::Beta(a) | Command::Mm(a) => a.common.threads,
        Command::Compare(a) => a.sweep.common.threads,
        Command::Conjugacy(a) => a.common.threads,
        Command::Witness(a) => a.common.threads,
        Command::Orbit(a) => a.common.threads,
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    if let Some(n) = threads(&cli.command) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let out = out_dir(&cli.command).to_path_buf();
    let run = commands::run(&cli.command);
    let (code, summary) = match run {
        Ok(s) => (0, s),
        Err((failure, s)) => {
            eprintln!("error: {}", failure.message());
            (failure.code(), s.with_error(&failure))
        }
    };
    if let Err(e) = summary.write(&out) {
        eprintln!("error: could not write summary to {}: {e}", out.display());
        if code == 0 {
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}
