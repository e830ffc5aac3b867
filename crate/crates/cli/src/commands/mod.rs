//! One function per subcommand; each writes `<name>.jsonl` and `<name>.csv` under the output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{config_digest, LoadedData};
use crate::error::CliError;
use crate::output::Stamp;

mod fit;
mod images;
mod kd;
mod stark;

pub use fit::{fit_bfield, fit_polarization_cmd, fit_tuneout, FitBfieldConfig, FitPolarizationConfig, FitTuneoutConfig};
pub use images::{analyze_images, load_frames, synth_data, AnalyzeConfig, SynthConfig, FRAMES_DIR};
pub use kd::{kd_simulate, KdConfig};
pub use stark::{polarizability, tuneout, PolarizabilityConfig, TuneoutConfig};

/// Arguments shared by every subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// TOML configuration file; defaults apply to missing keys.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set scan.wavelengths=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub records: usize,
}

fn stamp<T: Serialize>(command: &str, config: &T, seed: Option<u64>, data: &LoadedData) -> Result<Stamp, CliError> {
    Ok(Stamp {
        command: command.into(),
        config_digest: config_digest(command, config, seed)?,
        provenance: data.provenance.clone(),
        seed,
    })
}

/// Species provenance extended with the name and hash of an input table.
fn with_input(data: &LoadedData, input: &Path) -> Result<LoadedData, CliError> {
    let bytes = std::fs::read(input).map_err(|e| CliError::validation(format!("cannot read {}: {e}", input.display())))?;
    let digest: String = Sha256::digest(&bytes)[..8].iter().map(|b| format!("{b:02x}")).collect();
    Ok(LoadedData {
        data: data.data.clone(),
        provenance: format!("{}; input {} (sha256 {digest})", data.provenance, input.display()),
    })
}
