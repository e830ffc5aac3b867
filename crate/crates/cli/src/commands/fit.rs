use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tuneout_core::atomic::{HyperfineState, Spin};
use tuneout_core::fit::{
    fit_background_field, fit_background_field_global, fit_polarization, fit_tuneout_scan_with, projected_potential,
    vee_model, vee_model_two_slope, Axis, FieldFitMode, FieldFitOptions, FieldScan, FitOptions,
    PolarizationFitOptions, PolarizationModel, ScanPoint, VectorWeight, VeeShape,
};
use tuneout_core::stark::{LightField, Toggles};
use tuneout_core::tuneout::{TuneoutSolver, DEFAULT_BRACKET_NM};

use super::{stamp, with_input, Report, RunArgs};
use crate::config::{load_config, load_data};
use crate::error::CliError;
use crate::output::{num, RecordWriter, Table};

#[derive(Debug, Deserialize)]
struct PointRow {
    control: f64,
    value_er: f64,
    sigma_er: f64,
    m_f: i32,
    #[serde(default)]
    shots: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct FieldRow {
    axis: Axis,
    control: f64,
    value_er: f64,
    sigma_er: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::validation(format!("{} holds no rows", path.display())));
    }
    Ok(rows)
}

fn read_points(path: &Path) -> Result<Vec<ScanPoint>, CliError> {
    Ok(read_rows::<PointRow>(path)?
        .into_iter()
        .map(|r| ScanPoint {
            control: r.control,
            value_er: r.value_er,
            sigma_er: r.sigma_er,
            m_f: Spin::integer(r.m_f),
            shots: r.shots.unwrap_or(1),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitTuneoutConfig {
    /// Band to fit; the only band present when absent.
    pub m_f: Option<i32>,
    pub shape: VeeShape,
    pub fit: FitOptions,
}

impl Default for FitTuneoutConfig {
    fn default() -> Self {
        Self {
            m_f: None,
            shape: VeeShape::default(),
            fit: FitOptions {
                scale_covariance: true,
                ..FitOptions::default()
            },
        }
    }
}

pub fn fit_tuneout(args: &RunArgs, input: &Path) -> Result<Report, CliError> {
    let cfg: FitTuneoutConfig = load_config(args.config.as_deref(), &args.set)?;
    let loaded = with_input(&load_data(None)?, input)?;
    let stamp = stamp("fit-tuneout", &cfg, None, &loaded)?;
    let mut points = read_points(input)?;
    let bands: std::collections::BTreeSet<Spin> = points.iter().map(|p| p.m_f).collect();
    let band = match cfg.m_f {
        Some(m) => Spin::integer(m),
        None if bands.len() == 1 => *bands.iter().next().expect("one band"),
        None => {
            return Err(CliError::validation(format!(
                "points hold {} bands; choose one with m_f",
                bands.len()
            )))
        }
    };
    points.retain(|p| p.m_f == band);
    let fit = fit_tuneout_scan_with(&points, cfg.shape, &cfg.fit)?;

    let mut records = RecordWriter::create(&args.out, "fit_tuneout", stamp.clone())?;
    records.write("fit", &fit)?;
    let mut table = Table::new(&["control", "value_er", "sigma_er", "model_er"]);
    for p in &points {
        let model = match fit.shape {
            VeeShape::Symmetric => vee_model(p.control, fit.lambda_m_nm.value, fit.slope_er_per_pm.value),
            VeeShape::TwoSlope => vee_model_two_slope(
                p.control,
                fit.lambda_m_nm.value,
                fit.slope_below_er_per_pm.value,
                fit.slope_above_er_per_pm.value,
            ),
        };
        table.push(vec![num(p.control), num(p.value_er), num(p.sigma_er), num(model)]);
    }
    Ok(Report {
        outputs: vec![records.finish()?, table.write(&args.out, "fit_tuneout", &stamp)?],
        records: 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitPolarizationConfig {
    pub data: Option<PathBuf>,
    pub f: i32,
    /// `m_F = 0` zero; computed from the species data when absent.
    pub lambda_m_nm: Option<f64>,
    pub weight: VectorWeight,
    pub options: PolarizationFitOptions,
}

impl Default for FitPolarizationConfig {
    fn default() -> Self {
        Self {
            data: None,
            f: 1,
            lambda_m_nm: None,
            weight: VectorWeight::default(),
            options: PolarizationFitOptions::default(),
        }
    }
}

pub fn fit_polarization_cmd(args: &RunArgs, input: &Path) -> Result<Report, CliError> {
    let cfg: FitPolarizationConfig = load_config(args.config.as_deref(), &args.set)?;
    let loaded = with_input(&load_data(cfg.data.as_ref())?, input)?;
    let stamp = stamp("fit-polarization", &cfg, None, &loaded)?;
    let state = HyperfineState::rb87_ground(cfg.f, 0)?;
    let lambda_m = match cfg.lambda_m_nm {
        Some(l) => l,
        None => {
            TuneoutSolver::new(&state, &LightField::linear(790.0, 1.0), &loaded.data)?
                .find(DEFAULT_BRACKET_NM, Toggles::ALL)?
                .wavelength_nm
        }
    };
    let model = PolarizationModel::from_species(&state, &loaded.data, lambda_m, cfg.weight)?;
    let points = read_points(input)?;
    let fit = fit_polarization(&points, &model, &cfg.options)?;

    let mut records = RecordWriter::create(&args.out, "fit_polarization", stamp.clone())?;
    records.write("fit", &fit)?;
    let mut table = Table::new(&["control", "m_f", "value_er", "sigma_er", "model_er"]);
    let fitted = PolarizationModel {
        lambda_m_nm: fit.lambda_m_nm.value,
        ..model
    };
    for p in &points {
        let m = fitted.potential(p.control, p.m_f, fit.slope_er_per_pm.value, fit.a0.value, fit.sigma_a.value);
        table.push(vec![
            num(p.control),
            p.m_f.to_string(),
            num(p.value_er),
            num(p.sigma_er),
            num(m),
        ]);
    }
    Ok(Report {
        outputs: vec![records.finish()?, table.write(&args.out, "fit_polarization", &stamp)?],
        records: 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBfieldConfig {
    pub mode: FieldFitMode,
    pub options: FieldFitOptions,
}

impl Default for FitBfieldConfig {
    fn default() -> Self {
        Self {
            mode: FieldFitMode::Sequential,
            options: FieldFitOptions::default(),
        }
    }
}

pub fn fit_bfield(args: &RunArgs, input: &Path) -> Result<Report, CliError> {
    let cfg: FitBfieldConfig = load_config(args.config.as_deref(), &args.set)?;
    let loaded = with_input(&load_data(None)?, input)?;
    let stamp = stamp("fit-bfield", &cfg, None, &loaded)?;
    let rows = read_rows::<FieldRow>(input)?;
    let scans: Vec<FieldScan> = [Axis::X, Axis::Y, Axis::Z]
        .into_iter()
        .filter_map(|axis| {
            let points: Vec<ScanPoint> = rows
                .iter()
                .filter(|r| r.axis == axis)
                .map(|r| ScanPoint::new(r.control, r.value_er, r.sigma_er, Spin::ONE))
                .collect();
            (!points.is_empty()).then_some(FieldScan { axis, points })
        })
        .collect();
    let fit = match cfg.mode {
        FieldFitMode::Sequential => fit_background_field(&scans, &cfg.options)?,
        FieldFitMode::Global => fit_background_field_global(&scans, &cfg.options)?,
    };
    let mut records = RecordWriter::create(&args.out, "fit_bfield", stamp.clone())?;
    records.write("fit", &fit)?;
    let b0 = fit.b0.map(|e| e.value);
    let mut table = Table::new(&["axis", "control", "value_er", "sigma_er", "model_er"]);
    for r in &rows {
        table.push(vec![
            format!("{:?}", r.axis).to_lowercase(),
            num(r.control),
            num(r.value_er),
            num(r.sigma_er),
            num(projected_potential(fit.amplitude_er.value, b0, r.axis, r.control)),
        ]);
    }
    Ok(Report {
        outputs: vec![records.finish()?, table.write(&args.out, "fit_bfield", &stamp)?],
        records: 1,
    })
}
