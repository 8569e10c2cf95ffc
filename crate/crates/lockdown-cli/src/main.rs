//! `lockdown` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence
//! (partial outputs carry a `.partial` suffix).

mod commands;
mod failure;
mod output;
mod policy;
mod setup;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::*;
use crate::failure::{Failure, EXIT_VALIDATION};
use crate::output::RunMeta;

#[derive(Parser, Debug)]
#[command(name = "lockdown", version, about = "Minimum-cost stabilizing lockdowns on mobility networks")]
struct Cli {
    /// Worker threads for independent runs; results do not depend on it.
    #[arg(long, global = true, env = "LOCKDOWN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest raw tables named by a manifest into a canonical bundle.
    Build(BuildArgs),
    /// Calibrate transmission to an initial growth rate.
    Calibrate(CalibrateArgs),
    /// Optimal lockdown rates at a decay rate.
    Solve(SolveArgs),
    /// Epidemic trajectory under a policy.
    Simulate(SimulateArgs),
    /// Cost-matched policy comparison.
    Compare(CompareArgs),
    /// Sensitivity to one disease parameter.
    Sweep(SweepArgs),
    /// Generate a synthetic bundle.
    Synth(SynthArgs),
    /// Robustness studies on perturbed inputs.
    Perturb(PerturbArgs),
    /// Reproduction numbers and decay-rate conversion.
    R0(R0Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Build(_) => "build",
            Command::Calibrate(_) => "calibrate",
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Sweep(_) => "sweep",
            Command::Synth(_) => "synth",
            Command::Perturb(_) => "perturb",
            Command::R0(_) => "r0",
        }
    }
}

fn run(cli: Cli, args: Vec<String>) -> Result<(), Failure> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::usage("invalid input for `threads`: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    let meta = RunMeta::new(cli.command.name(), args);
    match &cli.command {
        Command::Build(a) => build(a, meta),
        Command::Calibrate(a) => calibrate(a, meta),
        Command::Solve(a) => solve_cmd(a, meta),
        Command::Simulate(a) => simulate_cmd(a, meta),
        Command::Compare(a) => compare(a, meta),
        Command::Sweep(a) => sweep(a, meta),
        Command::Synth(a) => synth(a, meta),
        Command::Perturb(a) => perturb(a, meta),
        Command::R0(a) => r0(a, meta),
    }
}

/// Arguments echoed into metadata, without the thread count.
fn echo_args() -> Vec<String> {
    let mut out = Vec::new();
    let mut it = std::env::args().skip(1);
    while let Some(a) = it.next() {
        if a == "--threads" {
            it.next();
        } else if !a.starts_with("--threads=") {
            out.push(a);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli, echo_args()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
