//! Weighted least squares and the physics fit models built on it.

mod lm;
mod magnetic;
mod polarization;
mod scan;


use serde::{Deserialize, Serialize};

use crate::atomic::{Spin, StateError};
use crate::stark::StarkError;
use crate::tuneout::TuneoutError;

pub use lm::{wls_fit, FitError, FitOptions, FitResult, IterationRecord, Model, Param, Termination};
pub use magnetic::{
    cos_theta_k, fit_background_field, fit_background_field_global, projected_potential, Axis,
    BackgroundFieldFit, FieldFitMode, FieldFitOptions, FieldScan, MagneticEnvironment, ScanFitSummary,
    ValidationChi2, ZeroFieldError,
};
pub use polarization::{
    fit_polarization, fluctuating_pol_gradient, fluctuating_pol_potential, PolarizationFit,
    PolarizationFitOptions, PolarizationModel, VectorWeight,
};
pub use scan::{fit_tuneout_scan, fit_tuneout_scan_with, vee_model, vee_model_two_slope, TuneoutScanFit, VeeShape};

/// One measured `|V0|` with its control value (wavelength in nm, or offset field in G).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub control: f64,
    pub value_er: f64,
    pub sigma_er: f64,
    pub m_f: Spin,
    #[serde(default)]
    pub shots: u32,
}

impl ScanPoint {
    pub fn new(control: f64, value_er: f64, sigma_er: f64, m_f: Spin) -> Self {
        Self {
            control,
            value_er,
            sigma_er,
            m_f,
            shots: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFitError {
    #[error("no points on the m_F = {0} branch")]
    MissingBranch(Spin),
    #[error("no {0:?} scan supplied")]
    MissingScan(Axis),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("parameters not identifiable: {0}")]
    Unidentifiable(String),
    #[error(transparent)]
    ZeroField(#[from] ZeroFieldError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Tuneout(#[from] TuneoutError),
    #[error(transparent)]
    Stark(#[from] StarkError),
    #[error(transparent)]
    State(#[from] StateError),
}
