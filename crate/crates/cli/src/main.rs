//! `pplab`: batch experiments on point processes ordered by clustering
//! strength. Every subcommand reads a declarative JSON config, writes its
//! artifacts under the configured output directory, and finishes with a
//! hashed manifest. Exit codes: 0 done, 2 bad config or precondition,
//! 3 statistically inconclusive at the configured budget.

mod config;
mod manifest;
mod plot;
mod run;

use clap::{Parser, Subcommand};
use config::Experiment;
use run::{Outcome, RunArgs};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pplab",
    version,
    about = "Point process experiments: generation, classification, ordering certificates, percolation and coverage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample point patterns and write them as CSV with JSON sidecars.
    Generate(RunArgs),
    /// Estimate void and moment sides against Poisson; verdict per generator.
    Classify(RunArgs),
    /// Certify convex-order along a chain of count laws.
    CxChain(RunArgs),
    /// Exact determinantal/permanental count laws on a Ginibre disk.
    Spectral(RunArgs),
    /// Largest-component curves over a radius grid, with crossing radii.
    PercSweep(RunArgs),
    /// Geometric-series bound on boundary path counts, optionally with
    /// an empirical mean.
    PathBound(RunArgs),
    /// Dual-estimator k-coverage curves.
    Coverage(RunArgs),
    /// Coverage crossing of two generators, with exact ball-count laws
    /// where computable.
    Crossing(RunArgs),
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::Generate(a) => (Experiment::Generate, a),
            Command::Classify(a) => (Experiment::Classify, a),
            Command::CxChain(a) => (Experiment::CxChain, a),
            Command::Spectral(a) => (Experiment::Spectral, a),
            Command::PercSweep(a) => (Experiment::PercolationSweep, a),
            Command::PathBound(a) => (Experiment::PathBound, a),
            Command::Coverage(a) => (Experiment::Coverage, a),
            Command::Crossing(a) => (Experiment::Crossing, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();
    match run::execute(experiment, &args) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive(reason)) => {
            eprintln!("inconclusive: {}", reason);
            ExitCode::from(3)
        }
        Err(message) => {
            eprintln!("error: {}", message);
            ExitCode::from(2)
        }
    }
}
