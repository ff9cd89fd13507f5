//! Command-line front end: argument parsing, config resolution and file output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Command, RunConfig, Settings};
use output::Manifest;

#[derive(Debug, Parser)]
#[command(name = "fwl", version, about = "Resonance spectra and phase-space densities of the open kicked rotor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON settings file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Eigenvalues of the open map.
    Spectrum(RunArgs),
    /// Husimi density of a Schur subspace or of eigenvectors in a band.
    SchurHusimi(RunArgs),
    /// Escape-time grid of the classical map.
    ClassicalEscape(RunArgs),
    /// Survival probability, decay fits and Lyapunov exponent.
    ClassicalSurvival(RunArgs),
    /// Orbits of the closed classical map.
    PhasePortrait(RunArgs),
    /// P_typ over several sizes and its power-law fit.
    WeylSweep(RunArgs),
    /// Re-run the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory; defaults to the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn resolve(command: Command, args: RunArgs) -> Result<RunConfig> {
    let settings = match &args.config {
        Some(path) => args.settings.or(Settings::from_json_file(path)?),
        None => args.settings,
    };
    RunConfig::resolve(command, settings)
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        let (command, args) = match self.command {
            Sub::Spectrum(a) => (Command::Spectrum, a),
            Sub::SchurHusimi(a) => (Command::SchurHusimi, a),
            Sub::ClassicalEscape(a) => (Command::ClassicalEscape, a),
            Sub::ClassicalSurvival(a) => (Command::ClassicalSurvival, a),
            Sub::PhasePortrait(a) => (Command::PhasePortrait, a),
            Sub::WeylSweep(a) => (Command::WeylSweep, a),
            Sub::Replay { manifest, out, threads } => {
                let mut config = Manifest::read(&manifest)?.config;
                if let Some(out) = out {
                    config.out = out;
                }
                if threads.is_some() {
                    config.threads = threads;
                }
                config.validate()?;
                return Ok(config);
            }
        };
        resolve(command, args)
    }
}

/// Runs one resolved configuration and writes its outputs.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let work = || -> Result<Vec<PathBuf>> {
        let (outputs, summary) = commands::execute(config)?;
        output::emit(config, outputs, summary)
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(work),
        None => work(),
    }
}
