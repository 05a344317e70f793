mod bench;
mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use platoon_sort::{BaseHeuristic, SchedulingMode};

use inputs::CostOverrides;

/// Cooperative platoon sorting: search, step compression and experiments.
///
/// File arguments accept `fixture:<name>` for the embedded instances:
/// table1, table1-goal, table1-path, sample-1 .. sample-30, goal-1, goal-2.
#[derive(Parser, Debug)]
#[command(name = "platoon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find a minimum-cost stepwise path into the goal set.
    Solve(SolveArgs),
    /// Compress a stepwise path into parallel movement steps.
    Schedule(ScheduleArgs),
    /// Run a seeded portfolio of stochastic searches and keep the best plan.
    Portfolio(PortfolioArgs),
    /// Reproduce one of the four experiments as CSV tables.
    Bench(BenchArgs),
    /// Print the per-step grids of a scheduled path.
    Render(RenderArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    #[default]
    Object,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum HeuristicArg {
    Manhattan,
    Misplaced,
}

impl From<HeuristicArg> for BaseHeuristic {
    fn from(h: HeuristicArg) -> Self {
        match h {
            HeuristicArg::Manhattan => BaseHeuristic::Manhattan,
            HeuristicArg::Misplaced => BaseHeuristic::Misplaced,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Conservative,
    Aggressive,
}

impl From<ModeArg> for SchedulingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Conservative => SchedulingMode::Conservative,
            ModeArg::Aggressive => SchedulingMode::Aggressive,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct CostArgs {
    /// TOML file with a `[cost]` table.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    beta_long: Option<f64>,
    #[arg(long)]
    beta_lc: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl CostArgs {
    fn overrides(&self) -> CostOverrides {
        CostOverrides {
            beta_long: self.beta_long,
            beta_lc: self.beta_lc,
            gamma: self.gamma,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Instance file.
    #[arg(long)]
    initial: String,
    /// Goal file; repeat to search several goal sets at once.
    #[arg(long, visible_alias = "goals", required = true)]
    goal: Vec<String>,
    /// Additional goal file, merged with `--goal`.
    #[arg(long)]
    goal2: Option<String>,
    /// Base heuristic; defaults to manhattan for paired goals, misplaced otherwise.
    #[arg(long, value_enum)]
    heuristic: Option<HeuristicArg>,
    /// Per-run time limit in milliseconds.
    #[arg(long)]
    time_limit_ms: Option<u64>,
    #[command(flatten)]
    cost: CostArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Perturb the heuristic to break ties randomly.
    #[arg(long)]
    stochastic: bool,
    /// Seed for the perturbation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// Path file written by `solve`.
    #[arg(long)]
    path: String,
    #[arg(long, value_enum, default_value = "conservative")]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
    #[command(flatten)]
    cost: CostArgs,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    path: String,
    #[arg(long, value_enum, default_value = "conservative")]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cost: CostArgs,
}

#[derive(Args, Debug)]
struct PortfolioArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Number of seeded runs.
    #[arg(long, default_value_t = 30)]
    workers: usize,
    /// Master seed from which the run seeds are drawn.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threads to use; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Scheduling modes to compare.
    #[arg(long = "mode", value_enum, value_delimiter = ',', default_values = ["conservative", "aggressive"])]
    modes: Vec<ModeArg>,
    /// Run the plain heuristic in every worker.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Experiment id, 1 to 4.
    #[arg(long)]
    experiment: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeded runs per portfolio; defaults to 30 (experiments 2 and 3) or 100 (experiment 4).
    #[arg(long)]
    workers: Option<usize>,
    /// Leave out wall-clock columns so output is byte-reproducible.
    #[arg(long)]
    omit_timing: bool,
    /// Directory for the CSV files; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Schedule(a) => commands::schedule(a),
        Command::Render(a) => commands::render(a),
        Command::Portfolio(a) => commands::portfolio(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::from(inputs::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
