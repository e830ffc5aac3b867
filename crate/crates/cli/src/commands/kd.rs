use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::SeedableRng;
use rand::rngs::StdRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use tuneout_core::kd::{
    diffraction_populations, invert_depth, kd_phase, raman_nath_check, DepthEstimate, InversionOptions, RamanNath,
};
use tuneout_core::stark::recoil_energy;
use tuneout_core::MomentumPopulations;

use super::{stamp, Report, RunArgs};
use crate::config::{load_config, load_data};
use crate::error::CliError;
use crate::output::{num, RecordWriter, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KdConfig {
    pub data: Option<PathBuf>,
    /// Lattice wavelength setting the recoil energy, nm.
    pub wavelength_nm: f64,
    pub tau_us: f64,
    pub depths_er: Vec<f64>,
    /// Highest order kept; adaptive when absent.
    pub n_max: Option<u32>,
    /// Gaussian noise per population: `relative * P + floor`.
    pub noise_relative: f64,
    pub noise_floor: f64,
    pub shots: usize,
    pub invert: bool,
    pub inversion: InversionOptions,
}

impl Default for KdConfig {
    fn default() -> Self {
        Self {
            data: None,
            wavelength_nm: 790.0185,
            tau_us: 8.75,
            depths_er: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            n_max: Some(6),
            noise_relative: 0.0,
            noise_floor: 0.0,
            shots: 1,
            invert: true,
            inversion: InversionOptions::default(),
        }
    }
}

impl KdConfig {
    fn noisy(&self) -> bool {
        self.noise_relative > 0.0 || self.noise_floor > 0.0
    }

    fn validate(&self, seed: Option<u64>) -> Result<(), CliError> {
        if !(self.tau_us > 0.0 && self.wavelength_nm > 0.0) {
            return Err(CliError::validation("tau_us and wavelength_nm must be positive"));
        }
        if self.depths_er.iter().any(|v| !v.is_finite()) || self.depths_er.is_empty() {
            return Err(CliError::validation("depths_er must be a nonempty list of finite values"));
        }
        if self.noise_relative < 0.0 || self.noise_floor < 0.0 || self.shots == 0 {
            return Err(CliError::validation("noise must be nonnegative and shots >= 1"));
        }
        if self.noisy() && seed.is_none() {
            return Err(CliError::validation("noisy simulation needs --seed"));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct KdRecord {
    v0_er: f64,
    shot: usize,
    phase: f64,
    recoil_hz: f64,
    raman_nath: RamanNath,
    populations: MomentumPopulations,
    estimate: Option<DepthEstimate>,
    inversion_error: Option<String>,
}

pub fn kd_simulate(args: &RunArgs, seed: Option<u64>) -> Result<Report, CliError> {
    let cfg: KdConfig = load_config(args.config.as_deref(), &args.set)?;
    cfg.validate(seed)?;
    let loaded = load_data(cfg.data.as_ref())?;
    let stamp = stamp("kd-simulate", &cfg, seed, &loaded)?;
    let recoil = recoil_energy(cfg.wavelength_nm, loaded.data.species.mass_kg.value);
    let mut rng = StdRng::seed_from_u64(seed.unwrap_or(0));

    let mut records = RecordWriter::create(&args.out, "kd", stamp.clone())?;
    let mut populations = Table::new(&["v0_er", "shot", "order", "population", "sigma"]);
    let mut inversions = Table::new(&["v0_er", "shot", "estimate_er", "sigma_er", "chi2", "dof"]);
    for &v0 in &cfg.depths_er {
        let clean = diffraction_populations(v0, cfg.tau_us, recoil, cfg.n_max);
        for shot in 0..cfg.shots {
            let pops = if cfg.noisy() {
                let mut values = BTreeMap::new();
                let mut sigmas = BTreeMap::new();
                for (&n, &p) in &clean.populations {
                    let s = cfg.noise_relative * p + cfg.noise_floor;
                    let draw = if s > 0.0 {
                        Normal::new(0.0, s).expect("positive sigma").sample(&mut rng)
                    } else {
                        0.0
                    };
                    values.insert(n, (p + draw).max(0.0));
                    if s > 0.0 {
                        sigmas.insert(n, s);
                    }
                }
                MomentumPopulations::new(values).with_sigmas(sigmas)
            } else {
                clean.clone()
            };
            for (&n, &p) in &pops.populations {
                populations.push(vec![
                    num(v0),
                    shot.to_string(),
                    n.to_string(),
                    num(p),
                    pops.sigma(n).map(num).unwrap_or_default(),
                ]);
            }
            let (estimate, inversion_error) = if cfg.invert {
                match invert_depth(&pops, cfg.tau_us, recoil, &cfg.inversion) {
                    Ok(e) => (Some(e), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            if let Some(e) = &estimate {
                inversions.push(vec![
                    num(v0),
                    shot.to_string(),
                    num(e.depth_er),
                    num(e.sigma_er),
                    num(e.chi2),
                    e.dof.to_string(),
                ]);
            }
            records.write(
                "kd",
                &KdRecord {
                    v0_er: v0,
                    shot,
                    phase: kd_phase(v0, cfg.tau_us, recoil),
                    recoil_hz: recoil,
                    raman_nath: raman_nath_check(v0, cfg.tau_us),
                    populations: pops,
                    estimate,
                    inversion_error,
                },
            )?;
        }
    }
    let mut outputs = vec![records.finish()?, populations.write(&args.out, "kd_populations", &stamp)?];
    if cfg.invert {
        outputs.push(inversions.write(&args.out, "kd_inversion", &stamp)?);
    }
    Ok(Report {
        outputs,
        records: cfg.depths_er.len() * cfg.shots,
    })
}
