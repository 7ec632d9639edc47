//! `crackq` command-line front-end: deterministic batch runs of the
//! verification suite, classical solves, operator dumps, VQA optimizations,
//! remeshing cascades and observable extraction.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_shots_flag, RunConfig};

#[derive(Parser)]
#[command(name = "crackq", version, about = "Variational quantum solver for the pre-cracked plate")]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Expectation mode: "exact" or a shot count.
    #[arg(long, global = true)]
    shots: Option<String>,
    /// Zero out sampled probabilities below this threshold and renormalize.
    #[arg(long, global = true)]
    mitigation_threshold: Option<f64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the decomposition/grouping/kernel invariant suite.
    Verify {
        /// Inject a coefficient error (negative control; must fail).
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Solve the problem with the classical FEM oracle.
    SolveClassical {
        /// Additionally solve this many uniformly refined meshes and
        /// tabulate the observables per level.
        #[arg(long, default_value_t = 0)]
        sweep: usize,
    },
    /// Dump the tensor decomposition and measurement groups of 𝕂.
    DecomposeDump,
    /// Optimize a single-mesh variational run and compare with the dense solve.
    VqaRun,
    /// Run the remeshing cascade.
    Cascade {
        /// Also run the matched cold-start arm for an A/B comparison.
        #[arg(long)]
        cold_start_arm: bool,
    },
    /// Evaluate quantum observables on the classical solution state.
    Observables,
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(raw) = &cli.shots {
        config.shots.shots = parse_shots_flag(raw)?;
    }
    if let Some(tau) = cli.mitigation_threshold {
        config.shots.mitigation_threshold = Some(tau);
    }
    if let Some(out) = cli.out {
        config.out = out;
    }

    match cli.command {
        Command::Verify { corrupt } => commands::cmd_verify(&config, corrupt),
        Command::SolveClassical { sweep } => commands::cmd_solve_classical(&config, sweep),
        Command::DecomposeDump => commands::cmd_decompose_dump(&config),
        Command::VqaRun => commands::cmd_vqa_run(&config),
        Command::Cascade { cold_start_arm } => commands::cmd_cascade(&config, cold_start_arm),
        Command::Observables => commands::cmd_observables(&config),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
