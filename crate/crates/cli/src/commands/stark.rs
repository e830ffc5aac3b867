use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tuneout_core::atomic::{HyperfineState, MatrixElements, Spin};
use tuneout_core::stark::{polarization_params, LightField, ModelOptions, StarkModel, Toggles};
use tuneout_core::tuneout::{contribution_ledger_with, default_bracket, TuneoutSolver};

use super::{stamp, Report, RunArgs};
use crate::config::{load_config, load_data};
use crate::error::CliError;
use crate::output::{num, RecordWriter, Table};

/// Light of circularity `A` with the given orientation.
fn light(wavelength_nm: f64, intensity: f64, circularity: f64, theta_k: f64, theta_p: f64) -> Result<LightField, CliError> {
    if !(-1.0..=1.0).contains(&circularity) {
        return Err(CliError::validation(format!("circularity {circularity} outside [-1, 1]")));
    }
    Ok(LightField::new(wavelength_nm, intensity, 0.5 * circularity.asin(), theta_k, theta_p)?)
}

fn options(data: &tuneout_core::SpeciesData, elements: Option<MatrixElements>) -> ModelOptions {
    let mut o = ModelOptions::for_data(data);
    if let Some(m) = elements {
        o.matrix_elements = m;
    }
    o
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarizabilityConfig {
    pub data: Option<PathBuf>,
    pub f: i32,
    pub m_f: Vec<i32>,
    pub start_nm: f64,
    pub stop_nm: f64,
    pub points: usize,
    /// Single-beam intensity, W/m^2.
    pub intensity_w_m2: f64,
    pub circularity: f64,
    pub theta_k: f64,
    pub theta_p: f64,
    pub matrix_elements: Option<MatrixElements>,
    pub toggles: Toggles,
}

impl Default for PolarizabilityConfig {
    fn default() -> Self {
        Self {
            data: None,
            f: 1,
            m_f: vec![-1, 0, 1],
            start_nm: 775.0,
            stop_nm: 800.0,
            points: 501,
            intensity_w_m2: 1360.0,
            circularity: 1.0,
            theta_k: 0.0,
            theta_p: std::f64::consts::FRAC_PI_2,
            matrix_elements: None,
            toggles: Toggles::ALL,
        }
    }
}

#[derive(Debug, Serialize)]
struct PolarizabilityRow {
    wavelength_nm: f64,
    m_f: i32,
    alpha_scalar_au: f64,
    alpha_vector_au: f64,
    alpha_tensor_au: f64,
    alpha_effective_au: f64,
    v0_er: f64,
}

#[derive(Debug, Serialize)]
struct ZeroCrossing {
    m_f: i32,
    wavelength_nm: Option<f64>,
    error: Option<String>,
}

pub fn polarizability(args: &RunArgs) -> Result<Report, CliError> {
    let cfg: PolarizabilityConfig = load_config(args.config.as_deref(), &args.set)?;
    if cfg.points < 2 || !(cfg.stop_nm > cfg.start_nm) {
        return Err(CliError::validation("grid needs at least 2 points and stop_nm > start_nm"));
    }
    let loaded = load_data(cfg.data.as_ref())?;
    let stamp = stamp("polarizability", &cfg, None, &loaded)?;
    let beam = light(cfg.start_nm, cfg.intensity_w_m2, cfg.circularity, cfg.theta_k, cfg.theta_p)?;
    let params = polarization_params(&beam);
    let model = StarkModel::new(
        &loaded.data,
        &HyperfineState::rb87_ground(cfg.f, 0)?,
        options(&loaded.data, cfg.matrix_elements),
    )?;
    let mut records = RecordWriter::create(&args.out, "polarizability", stamp.clone())?;
    let mut table = Table::new(&[
        "wavelength_nm",
        "m_f",
        "alpha_scalar_au",
        "alpha_vector_au",
        "alpha_tensor_au",
        "alpha_effective_au",
        "v0_er",
    ]);
    for &m in &cfg.m_f {
        HyperfineState::rb87_ground(cfg.f, m)?;
    }
    for k in 0..cfg.points {
        let l = cfg.start_nm + (cfg.stop_nm - cfg.start_nm) * k as f64 / (cfg.points - 1) as f64;
        let set = model.d_line(l)?;
        for &m in &cfg.m_f {
            let spin = Spin::integer(m);
            let row = PolarizabilityRow {
                wavelength_nm: l,
                m_f: m,
                alpha_scalar_au: set.scalar + model.residual_scalar(cfg.toggles),
                alpha_vector_au: set.vector,
                alpha_tensor_au: set.tensor,
                alpha_effective_au: model.effective_polarizability(l, spin, params, cfg.toggles)?,
                v0_er: model.lattice_depth(spin, &beam.at_wavelength(l), cfg.toggles)?,
            };
            table.push(vec![
                num(row.wavelength_nm),
                m.to_string(),
                num(row.alpha_scalar_au),
                num(row.alpha_vector_au),
                num(row.alpha_tensor_au),
                num(row.alpha_effective_au),
                num(row.v0_er),
            ]);
            records.write("polarizability", &row)?;
        }
    }
    for &m in &cfg.m_f {
        let state = HyperfineState::rb87_ground(cfg.f, m)?;
        let solver = TuneoutSolver::with_options(&state, &beam, &loaded.data, options(&loaded.data, cfg.matrix_elements))?;
        let zero = match solver.find(default_bracket(&state, &beam), cfg.toggles) {
            Ok(r) => ZeroCrossing {
                m_f: m,
                wavelength_nm: Some(r.wavelength_nm),
                error: None,
            },
            Err(e) => ZeroCrossing {
                m_f: m,
                wavelength_nm: None,
                error: Some(e.to_string()),
            },
        };
        records.write("zero_crossing", &zero)?;
    }
    let n = table.len();
    Ok(Report {
        outputs: vec![records.finish()?, table.write(&args.out, "polarizability", &stamp)?],
        records: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneoutConfig {
    pub data: Option<PathBuf>,
    pub f: i32,
    pub m_f: i32,
    pub intensity_w_m2: f64,
    pub circularity: f64,
    pub theta_k: f64,
    pub theta_p: f64,
    pub toggles: Toggles,
    pub matrix_elements: Option<MatrixElements>,
    /// Search interval, nm; chosen from the state and light when absent.
    pub bracket: Option<[f64; 2]>,
    /// Also compute the contribution ledger with uncertainty propagation.
    pub ledger: bool,
}

impl Default for TuneoutConfig {
    fn default() -> Self {
        Self {
            data: None,
            f: 1,
            m_f: 0,
            intensity_w_m2: 1360.0,
            circularity: 0.0,
            theta_k: 0.0,
            theta_p: std::f64::consts::FRAC_PI_2,
            toggles: Toggles::ALL,
            matrix_elements: None,
            bracket: None,
            ledger: true,
        }
    }
}

pub fn tuneout(args: &RunArgs) -> Result<Report, CliError> {
    let cfg: TuneoutConfig = load_config(args.config.as_deref(), &args.set)?;
    let loaded = load_data(cfg.data.as_ref())?;
    let stamp = stamp("tuneout", &cfg, None, &loaded)?;
    let state = HyperfineState::rb87_ground(cfg.f, cfg.m_f)?;
    let beam = light(790.0, cfg.intensity_w_m2, cfg.circularity, cfg.theta_k, cfg.theta_p)?;
    let opts = options(&loaded.data, cfg.matrix_elements);
    let bracket = cfg.bracket.map(|[a, b]| (a, b)).unwrap_or_else(|| default_bracket(&state, &beam));
    let result = TuneoutSolver::with_options(&state, &beam, &loaded.data, opts)?.find(bracket, cfg.toggles)?;

    let mut records = RecordWriter::create(&args.out, "tuneout", stamp.clone())?;
    records.write("tuneout", &result)?;
    let mut table = Table::new(&["quantity", "value", "sigma", "unit"]);
    table.push(vec![
        "tuneout".into(),
        num(result.wavelength_nm),
        String::new(),
        "nm".into(),
    ]);
    table.push(vec![
        "slope".into(),
        num(result.slope_er_per_pm),
        String::new(),
        "E_r/pm".into(),
    ]);
    if cfg.ledger {
        let ledger = contribution_ledger_with(&state, &beam, &loaded.data, opts, bracket)?;
        for (name, e, unit) in [
            ("d_lines", ledger.d_lines_nm, "nm"),
            ("tensor_shift", ledger.tensor_shift_pm, "pm"),
            ("higher_states_shift", ledger.higher_states_shift_pm, "pm"),
            ("core_shift", ledger.core_shift_pm, "pm"),
            ("vector_shift", ledger.vector_shift_pm, "pm"),
            ("total_shift", ledger.total_shift_pm, "pm"),
            ("total", ledger.total_nm, "nm"),
        ] {
            table.push(vec![name.into(), num(e.value), num(e.sigma), unit.into()]);
        }
        records.write("ledger", &ledger)?;
    }
    let n = table.len();
    Ok(Report {
        outputs: vec![records.finish()?, table.write(&args.out, "tuneout", &stamp)?],
        records: n,
    })
}
