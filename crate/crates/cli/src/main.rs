//! `gbrw`: simulate, recurse and verify generalized branching random walks.
//!
//! Exit codes: 0 when everything ran and every check passed, 1 when a
//! verification failed (the report is still written), 2 on configuration or
//! usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gbrw_core::simulate::DEFAULT_NODE_CAP;
use serde::Serialize;

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(
    name = "gbrw",
    version,
    about = "Generalized branching random walks: tails, bounds and tightness checks"
)]
struct Cli {
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true, env = "GBRW_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo tightness table: median and recentered quantiles per horizon.
    Simulate(SimulateArgs),
    /// Iterate the exact tail recursion and its two bounds.
    Recurse(RecurseArgs),
    /// Check assumptions, the Lyapunov bound or the pointwise bounds.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Choose a parameter bundle for the Lyapunov functional.
    Params(ParamsArgs),
    /// Run recursion, assumption, Lyapunov and simulation checks in one go.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Boundedness of L along the exact recursion and the right-tail certificate.
    Lyapunov(LyapunovArgs),
    /// One-step pointwise bounds with B fitted from the joint-tail assumption.
    Pwbounds(PwboundsArgs),
    /// Offspring, marginal-tail and joint-tail assumptions.
    Assumptions(AssumptionsArgs),
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Model file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the main output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Horizons, comma separated.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    /// Quantile level of the width, in (0, 0.5).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Nodes a single replicate may visit before failing.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
    /// Also write a JSON record of the run (config, options, table).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct RecurseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    /// Any of lower, exact, upper.
    #[arg(long, default_value = "lower,exact,upper")]
    modes: String,
    /// Displacement-vector draws per k for sampled joint laws.
    #[arg(long, default_value_t = 4096)]
    mc_budget: usize,
    #[arg(long, default_value_t = 0x6762_7277)]
    mc_seed: u64,
    /// Also write a JSON report with the sandwich check.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct MarginalArgs {
    /// Location slack of the marginal law.
    #[arg(long)]
    eps0: f64,
    /// Exponential right-tail rate.
    #[arg(long)]
    a: f64,
    /// Onset of the exponential decay.
    #[arg(long = "M0")]
    #[serde(rename = "M0")]
    big_m0: f64,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum PartArg {
    #[default]
    Argument,
    Output,
}

#[derive(Args, Debug, Serialize)]
struct LyapunovArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    marginal: MarginalArgs,
    /// Override the declared lower mean bound m0.
    #[arg(long)]
    m0: Option<f64>,
    /// Where the positive part in l is applied.
    #[arg(long, value_enum, default_value_t = PartArg::Argument)]
    positive_part: PartArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TailVariantArg {
    Gt,
    GtPrime,
}

#[derive(Args, Debug, Serialize)]
struct PwboundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    eta1: f64,
    #[arg(long, value_enum, default_value_t = TailVariantArg::Gt)]
    variant: TailVariantArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum BranchingArg {
    Bounded,
    IdenticalMarginal,
}

#[derive(Args, Debug, Serialize)]
struct AssumptionsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    marginal: MarginalArgs,
    #[arg(long, default_value_t = 0.05)]
    eta1: f64,
    /// Last generation to check for explicit schedules.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum, default_value_t = BranchingArg::Bounded)]
    branching: BranchingArg,
    #[arg(long, value_enum, default_value_t = TailVariantArg::Gt)]
    variant: TailVariantArg,
}

#[derive(Args, Debug, Serialize)]
struct ParamsArgs {
    #[arg(long)]
    k0: usize,
    #[arg(long)]
    m0: f64,
    #[command(flatten)]
    #[serde(flatten)]
    marginal: MarginalArgs,
    /// Grid step; M is a multiple of it.
    #[arg(long, default_value_t = gbrw_core::Grid::DEFAULT_H)]
    h: f64,
    /// Infimum of the offspring means, if known.
    #[arg(long)]
    mean: Option<f64>,
    /// Override c1 (default max(1, k0(k0-1)/2)).
    #[arg(long)]
    c1: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Horizon of the recursion checks.
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    marginal: MarginalArgs,
    #[arg(long, default_value_t = 0.05)]
    eta1: f64,
    /// Horizons of the tightness table.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("gbrw: cannot set up {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Recurse(a) => commands::recurse(a),
        Command::Verify(VerifyCommand::Lyapunov(a)) => commands::verify_lyapunov(a),
        Command::Verify(VerifyCommand::Pwbounds(a)) => commands::verify_pwbounds(a),
        Command::Verify(VerifyCommand::Assumptions(a)) => commands::verify_assumptions(a),
        Command::Params(a) => commands::params(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gbrw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
