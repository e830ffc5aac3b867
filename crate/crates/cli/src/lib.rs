//! Batch front end for the tune-out toolkit.
//!
//! Every subcommand reads an optional TOML config (unknown keys rejected),
//! applies `--set` overrides, and writes line-delimited JSON records plus flat
//! CSV tables. Each record and row carries the SHA-256 digest of the resolved
//! config; JSON records also carry the data provenance and seed.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{Report, RunArgs};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tuneout", version, about = "Tune-out wavelength modelling, synthesis and analysis")]
pub struct Cli {
    /// Cap on worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polarizabilities and lattice depth over a wavelength grid.
    Polarizability(RunArgs),
    /// Tune-out wavelength and contribution ledger.
    Tuneout(RunArgs),
    /// Kapitza-Dirac populations and depth inversion.
    KdSimulate {
        #[command(flatten)]
        run: RunArgs,
        /// Required when noise is configured.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthetic absorption frames for a tune-out scan.
    SynthData {
        #[command(flatten)]
        run: RunArgs,
        /// Seed for fringes, noise and shot order; equal seeds give identical output.
        #[arg(long)]
        seed: u64,
    },
    /// Optical density, populations and depth for every signal frame in a directory.
    AnalyzeImages {
        #[command(flatten)]
        run: RunArgs,
        /// Directory of .pgm frames with .toml sidecars.
        #[arg(long, short)]
        input: PathBuf,
    },
    /// V-shaped fit of |V0| against wavelength.
    FitTuneout {
        #[command(flatten)]
        run: RunArgs,
        /// CSV with control, value_er, sigma_er, m_f columns.
        #[arg(long, short)]
        points: PathBuf,
    },
    /// Fluctuating-polarization fit of the m_F = +-1 branches.
    FitPolarization {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, short)]
        points: PathBuf,
    },
    /// Background magnetic field from per-axis offset scans.
    FitBfield {
        #[command(flatten)]
        run: RunArgs,
        /// CSV with axis, control, value_er, sigma_er columns.
        #[arg(long, short)]
        points: PathBuf,
    },
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::validation("--jobs must be at least 1"));
        }
        // A pool built earlier in the same process stays in effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match &cli.command {
        Command::Polarizability(run) => commands::polarizability(run),
        Command::Tuneout(run) => commands::tuneout(run),
        Command::KdSimulate { run, seed } => commands::kd_simulate(run, *seed),
        Command::SynthData { run, seed } => commands::synth_data(run, *seed),
        Command::AnalyzeImages { run, input } => commands::analyze_images(run, input),
        Command::FitTuneout { run, points } => commands::fit_tuneout(run, points),
        Command::FitPolarization { run, points } => commands::fit_polarization_cmd(run, points),
        Command::FitBfield { run, points } => commands::fit_bfield(run, points),
    }
}
