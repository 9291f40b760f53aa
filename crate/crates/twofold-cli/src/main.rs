//! Command-line driver: load a run configuration, dispatch to one of the
//! pipeline commands, map failures to exit codes (0 success, 2 config or
//! I/O, 3 numerical).

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "twofold",
    version,
    about = "Analysis of planar piecewise-smooth two-fold singularities and their regularizations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (plain text, `key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` from the config (default twofold-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report the singularity class, tangencies, sliding partition, and
    /// pseudo-equilibria of a model
    Classify(RunArgs),
    /// Tabulate the closed-form bifurcation quantities per transition function
    Analyze(RunArgs),
    /// Integrate one trajectory per parameter value (hybrid at epsilon = 0,
    /// smooth otherwise)
    Simulate(RunArgs),
    /// Continue the limit-cycle branch born at the Hopf point, with
    /// saddle-node and explosion annotations
    Continue(RunArgs),
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let args = match &cli.cmd {
        Cmd::Classify(a) | Cmd::Analyze(a) | Cmd::Simulate(a) | Cmd::Continue(a) => a,
    };
    if let Some(n) = args.threads {
        // Ignore a second initialization; the pool can only be set once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("twofold-out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return 2;
    }
    let result = match &cli.cmd {
        Cmd::Classify(_) => commands::classify(&cfg, &out_dir),
        Cmd::Analyze(_) => commands::analyze(&cfg, &out_dir),
        Cmd::Simulate(_) => commands::simulate(&cfg, &out_dir),
        Cmd::Continue(_) => commands::cmd_continue(&cfg, &out_dir),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            3
        }
    }
}
