//! Command-line front end: TOML experiment configs, solver and bound
//! reports, simulation runs and CSV output.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{preset, preset_names, ExperimentConfig, PRESETS};

#[derive(Debug, Parser)]
#[command(
    name = "mabandon",
    version,
    about = "Bandits with user abandonment: solve, bound and simulate"
)]
pub struct Cli {
    /// Worker threads for simulations (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Experiment config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled preset name (see `mabandon presets`).
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Episodes per run (K).
    #[arg(long)]
    pub episodes: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal values, gaps, orientation and model checks.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        json: bool,
    },
    /// Asymptotic regret constants.
    Bounds {
        #[command(flatten)]
        source: Source,
        /// Bins for the discretized constants (general model).
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Monte-Carlo regret traces, one file per policy.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sim: SimArgs,
        /// Output directory (default: output.dir from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate all policies, then write a summary table and bound overlay.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Brute-force optimality check and regret-estimator cross-check.
    Validate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        json: bool,
    },
    /// List presets, or print one as TOML.
    Presets { name: Option<String> },
}

fn load(source: &Source) -> Result<ExperimentConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => ExperimentConfig::load(path),
        (None, Some(name)) => preset(name),
        (None, None) => Err(anyhow!("pass --config <path> or --preset <name>")),
    }
}

fn load_with(source: &Source, sim: &SimArgs) -> Result<ExperimentConfig> {
    let mut cfg = load(source)?;
    cfg.override_sim(sim.seed, sim.runs, sim.episodes);
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command. `Ok(false)` means a validation check failed.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(anyhow!("--workers must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let mut buf = Vec::new();
    let result = pool.install(|| dispatch(cli.command, &mut buf));
    out.write_all(&buf)?;
    result
}

fn dispatch(command: Command, out: &mut Vec<u8>) -> Result<bool> {
    match command {
        Command::Solve { source, json } => commands::solve(&load(&source)?, json, out)?,
        Command::Bounds { source, bins, json } => commands::bounds(&load(&source)?, bins, json, out)?,
        Command::Simulate { source, sim, out: dir } => {
            let cfg = load_with(&source, &sim)?;
            let dir = dir.unwrap_or_else(|| cfg.output.dir.clone());
            commands::simulate(&cfg, &dir, out)?;
            writeln!(out, "traces written to {}", dir.display())?;
        }
        Command::Compare {
            source,
            sim,
            out: dir,
            json,
        } => {
            let cfg = load_with(&source, &sim)?;
            let dir = dir.unwrap_or_else(|| cfg.output.dir.clone());
            commands::compare(&cfg, &dir, json, out)?;
        }
        Command::Validate { source, sim, json } => return commands::validate(&load_with(&source, &sim)?, json, out),
        Command::Presets { name: None } => {
            for name in preset_names() {
                writeln!(out, "{name}")?;
            }
        }
        Command::Presets { name: Some(name) } => {
            let (_, text) = PRESETS
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| anyhow!("unknown preset {name:?}; available: {}", preset_names().join(", ")))?;
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(true)
}
