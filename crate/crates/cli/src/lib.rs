//! The `squat` command line: train the assistance network, simulate
//! assisted squats, serve the real-time loop, replay session logs and
//! analyze metabolic and kinematic data.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{CliConfig, Condition, GainsFile, DEFAULT_SEED};
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "squat",
    version,
    about = "Squat-assistance exoskeleton toolkit"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream [default: 42, or `seed` in the config].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override a config value, e.g. `--set train.max_epochs=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tune tracking gains, build the dataset and train the network.
    Train,
    /// Roll out the simulated subject with or without assistance.
    Simulate {
        #[arg(long)]
        psi: Option<PathBuf>,
        #[arg(long, value_enum)]
        condition: Option<Condition>,
        #[arg(long)]
        cycles: Option<usize>,
    },
    /// Run the 100 Hz loop with telemetry until interrupted.
    Serve {
        #[arg(long)]
        psi: Option<PathBuf>,
        /// Session length, s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Recompute the commands of a session log.
    Replay {
        log: PathBuf,
        #[arg(long)]
        psi: Option<PathBuf>,
    },
    /// Summarize a subjects manifest into the results table and curves.
    Analyze { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Simulate { .. } => "simulate",
            Command::Serve { .. } => "serve",
            Command::Replay { .. } => "replay",
            Command::Analyze { .. } => "analyze",
        }
    }
}

/// Resolves the configuration and runs one subcommand.
pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = CliConfig::resolve(
        cli.global.config.as_deref(),
        &cli.global.overrides,
        cli.global.seed,
    )?;
    let out = &cli.global.out;
    std::fs::create_dir_all(out)?;
    let outputs = match &cli.command {
        Command::Train => commands::train(&cfg, out)?,
        Command::Simulate {
            psi,
            condition,
            cycles,
        } => {
            if let Some(p) = psi {
                cfg.simulate.psi = Some(p.clone());
            }
            if let Some(c) = condition {
                cfg.simulate.condition = *c;
            }
            if let Some(n) = cycles {
                cfg.simulate.cycles = *n;
            }
            commands::simulate(&cfg, out)?
        }
        Command::Serve { psi, duration } => {
            if let Some(p) = psi {
                cfg.runtime.psi = p.clone();
            }
            if duration.is_some() {
                cfg.runtime.duration_s = *duration;
            }
            cfg.runtime.validate()?;
            commands::serve(&cfg, out)?
        }
        Command::Replay { log, psi } => {
            if let Some(p) = psi {
                cfg.runtime.psi = p.clone();
            }
            commands::replay(&cfg, log, out)?
        }
        Command::Analyze { manifest } => commands::analyze(manifest, out)?,
    };
    manifest::write(cli, &cfg, &outputs)
}
