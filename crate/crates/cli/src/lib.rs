//! Command-line front end for surrogate-assisted reliability-based design
//! optimization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;
pub mod problem;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
pub use crate::error::CliError;
use crate::exec::Pool;
use crate::output::{Manifest, Opened, RunDir};
use crate::problem::Problem;

const DEFAULT_OUT: &str = "rbdo-out";

#[derive(Debug, Parser)]
#[command(name = "rbdo", version, about = "Kriging-assisted reliability analysis and design optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Master seed; overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for limit-state evaluation. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Skip the run if the output directory holds a complete run of the same
    /// configuration; fail if it holds a different one.
    #[arg(long, global = true)]
    pub resume: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Subset simulation on the true limit state at the configured design.
    Reliability,
    /// Enrich kriging surrogates until the bracketing spread target is met.
    Refine,
    /// Deterministic optimization on the mean values.
    Ddo,
    /// Reliability-based optimization, verified on the true limit states.
    Rbdo,
    /// Verify the configured design on the true limit states.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Reliability => "reliability",
            Self::Refine => "refine",
            Self::Ddo => "ddo",
            Self::Rbdo => "rbdo",
            Self::Verify => "verify",
        }
    }
}

/// Runs one command and returns its final manifest.
pub fn run(cli: &Cli) -> Result<Manifest, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let problem = Problem::from_config(&config)?;
    let pool = Pool::new(cli.threads)?;

    let manifest = Manifest::new(cli.command.name(), &config);
    let dir = match RunDir::open(&out, manifest, &config, cli.resume)? {
        Opened::Fresh(dir) => dir,
        Opened::AlreadyComplete(m) => return Ok(m),
    };
    let ctx = Context {
        config: &config,
        problem: &problem,
        exec: &pool,
        out: &dir,
    };
    let outcome = match cli.command {
        Command::Reliability => commands::reliability(&ctx),
        Command::Refine => commands::refine(&ctx),
        Command::Ddo => commands::ddo(&ctx),
        Command::Rbdo => commands::rbdo(&ctx),
        Command::Verify => commands::verify(&ctx),
    };
    let manifest = dir.finish(&outcome)?;
    outcome.map(|_| manifest)
}
