//! Command-line front end for the `chinese-auction` library.
//!
//! Every command writes a human-readable summary to stdout and, with
//! `--out PATH`, a JSON result file. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success / check passed |
//! | 1 | check failed or reproduction verdict mismatch |
//! | 2 | invalid instance, profile or option |
//! | 3 | no pure equilibrium found (none exists, dynamics did not converge, or the epsilon bound was missed) |
//! | 4 | enumeration or grid size guard tripped |

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod repro;

pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const NO_EQUILIBRIUM: i32 = 3;
    pub const GUARD: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "chinese-auction", version, about = "Equilibria of proportional-lottery auctions")]
pub struct Cli {
    /// Worker threads for enumeration, audits and simulation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the JSON result to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an equilibrium and certify it.
    Solve(SolveArgs),
    /// Certify a given profile or ticket assignment.
    Verify(VerifyArgs),
    /// Search a profile grid for evidence that no pure equilibrium exists.
    Audit(AuditArgs),
    /// Estimate expected utilities by Monte Carlo.
    Simulate(SimulateArgs),
    /// Rerun a bundled example and check its expected verdict.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Proportional profile for common valuations and given budgets.
    SymmetricGiven,
    /// Closed-form bids for common valuations and costly weight.
    SymmetricCostly,
    /// Damped round-robin best-response dynamics.
    Dynamics,
    /// Heaviest ticket first, common valuations.
    Greedy,
    /// Ordered sweep plus repair, two items.
    TwoItem,
    /// Arrival cascade, identical single tickets.
    Cascade,
    /// Enumerate every joint ticket assignment.
    Exhaustive,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Override the solver picked from the instance shape.
    #[arg(long, value_enum)]
    pub solver: Option<Solver>,
    /// Largest acceptable best-response gap (continuous budgets).
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Damping of best-response dynamics, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_rounds: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Profile matrix, assignment, or a `solve` result file.
    #[arg(long)]
    pub profile: PathBuf,
    /// Largest acceptable best-response gap (continuous budgets).
    #[arg(long, default_value_t = 1e-9)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// Pass when every grid profile leaves some player a gain above `--epsilon`.
    Nonexistence,
    /// Pass when some grid profile is within `--epsilon` of an equilibrium.
    Equilibrium,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Step of the profile grid.
    #[arg(long, default_value_t = 0.01)]
    pub grid: f64,
    /// Step of the deviation grid (at most `--grid`).
    #[arg(long, default_value_t = 0.001)]
    pub dev_grid: f64,
    #[arg(long, value_enum, default_value_t = Expectation::Nonexistence)]
    pub expect: Expectation,
    /// Gap threshold separating the two expectations.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Also write every grid cell and its gap as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Profile to simulate; defaults to the one `solve` would return.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Registry name; see `--list`.
    pub name: Option<String>,
    /// Run every registered example.
    #[arg(long, conflicts_with = "name")]
    pub all: bool,
    /// Print the registry and exit.
    #[arg(long, conflicts_with_all = ["name", "all"])]
    pub list: bool,
}

/// Result of one command: exit code, summary text and the JSON report.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
    pub report: serde_json::Value,
    /// The command could not run; the summary is an error message.
    pub error: bool,
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Audit(a) => commands::audit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Repro(a) => repro::command(a),
    }
}
