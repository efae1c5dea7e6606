mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sectorflow", version, about = "Probabilistic sector congestion and schedule optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark instance and its nominal schedule
    Gen(GenArgs),
    /// Write per-waypoint marginal distributions
    Propagate(PipelineArgs),
    /// Write sector presence probabilities and congestion tails
    Congestion(PipelineArgs),
    /// Print the (delay, congestion) objective pair of a schedule
    Evaluate(PipelineArgs),
    /// Search for Pareto-optimal schedules with NSGA-II
    Optimize(OptimizeArgs),
    /// Compare closed-form congestion against Monte-Carlo simulation
    McCheck(McCheckArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Minutes between the two entry targets of a leaf
    #[arg(long, default_value_t = 2.0)]
    pub leaf_gap: f64,
    /// Width of the uniform draw for leaf entry targets (minutes)
    #[arg(long, default_value_t = 10.0)]
    pub leaf_spread: f64,
    #[arg(long, default_value_t = 5.0)]
    pub window_before: f64,
    #[arg(long, default_value_t = 10.0)]
    pub window_after: f64,
    #[arg(long, default_value_t = 10.0)]
    pub leg_duration: f64,
    /// Support length of the entry-time triangle (minutes)
    #[arg(long, default_value_t = 15.0)]
    pub entry_support: f64,
    /// Support length of the en-route kernels (minutes)
    #[arg(long, default_value_t = 8.0)]
    pub enroute_support: f64,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Schedule document; the nominal schedule is used when omitted
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Time step in minutes (regrids the instance)
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: PipelineArgs,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 100)]
    pub generations: usize,
    #[arg(long, default_value_t = 0.9)]
    pub crossover_probability: f64,
    /// Per-gene mutation probability (default 1/dimension)
    #[arg(long)]
    pub mutation_probability: Option<f64>,
    #[arg(long, default_value_t = 15.0)]
    pub sbx_eta: f64,
    #[arg(long, default_value_t = 20.0)]
    pub mutation_eta: f64,
    /// Start from a purely random population
    #[arg(long)]
    pub no_seed_nominal: bool,
}

#[derive(Debug, Args)]
pub struct McCheckArgs {
    #[command(flatten)]
    pub common: PipelineArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
