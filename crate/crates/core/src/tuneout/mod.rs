//! Tune-out wavelengths: zeros of the lattice depth between the D lines,
//! the linear lattice-depth model around a zero, and the ledger of how each
//! polarizability component moves the zero.

mod brent;
mod ledger;

use serde::{Deserialize, Serialize};

use crate::atomic::{DataError, HyperfineState, MatrixElements, SpeciesData, Spin};
use crate::stark::{LightField, ModelOptions, StarkError, StarkModel};

pub use crate::stark::Toggles;
pub use brent::{brent, BrentError, BrentRoot};
pub use ledger::{
    contribution_ledger, contribution_ledger_with, default_bracket, monte_carlo_ledger, ContributionLedger,
    DatumSensitivity, Estimate, MonteCarloSpread,
};

/// Window between the D lines in which roots are searched.
pub const SEARCH_WINDOW_NM: (f64, f64) = (780.5, 794.5);
/// Bracket for scalar-dominated `F = 1` roots.
pub const DEFAULT_BRACKET_NM: (f64, f64) = (785.0, 794.0);
/// Bracket when circular light pushes `m_F != 0` roots away.
pub const WIDE_BRACKET_NM: (f64, f64) = (782.0, 794.5);

#[derive(Debug, thiserror::Error)]
pub enum TuneoutError {
    #[error("no sign change of V0 in [{lo}, {hi}] nm (V0 = {v_lo:.4e}, {v_hi:.4e} E_r)")]
    NoSignChange { lo: f64, hi: f64, v_lo: f64, v_hi: f64 },
    #[error("{} sign changes of V0 found in the bracket, near {:?} nm", .0.len(), .0)]
    MultipleRoots(Vec<f64>),
    #[error("bracket [{lo}, {hi}] nm must be increasing and inside [780.5, 794.5] nm")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("resonance at {0} nm lies inside the bracket")]
    ResonanceInBracket(f64),
    #[error("root solve did not converge: {0}")]
    NotConverged(String),
    #[error("wavelength grid needs at least 3 increasing points and must bracket a root")]
    InvalidGrid,
    #[error(transparent)]
    Stark(#[from] StarkError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Absolute root tolerance, nm.
    pub xtol_nm: f64,
    /// Points of the sign-change scan across the bracket.
    pub scan_points: usize,
    /// Half step of the central-difference slope, nm.
    pub slope_step_nm: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            xtol_nm: 1e-10,
            scan_points: 200,
            slope_step_nm: 1e-3,
            max_iterations: 200,
        }
    }
}

/// A located zero of the lattice depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneoutResult {
    pub wavelength_nm: f64,
    /// `dV0/dlambda` at the root, E_r per pm.
    pub slope_er_per_pm: f64,
    pub bracket_nm: (f64, f64),
    pub toggles: Toggles,
    pub f: Spin,
    pub m_f: Spin,
    pub matrix_elements: MatrixElements,
    pub iterations: usize,
    /// Post-hoc check that V0 changes sign across `root +- 10 xtol`.
    pub sign_change_verified: bool,
}

/// Zero finder bound to one state, beam and dataset.
#[derive(Debug, Clone)]
pub struct TuneoutSolver {
    model: StarkModel,
    m_f: Spin,
    beam: LightField,
    matrix_elements: MatrixElements,
    pub options: SolverOptions,
}

impl TuneoutSolver {
    pub fn new(state: &HyperfineState, beam: &LightField, data: &SpeciesData) -> Result<Self, TuneoutError> {
        Self::with_options(state, beam, data, ModelOptions::for_data(data))
    }

    pub fn with_options(
        state: &HyperfineState,
        beam: &LightField,
        data: &SpeciesData,
        model_options: ModelOptions,
    ) -> Result<Self, TuneoutError> {
        beam.validate()?;
        Ok(Self {
            model: StarkModel::new(data, state, model_options)?,
            m_f: state.m_f(),
            beam: *beam,
            matrix_elements: model_options.matrix_elements,
            options: SolverOptions::default(),
        })
    }

    pub fn model(&self) -> &StarkModel {
        &self.model
    }

    pub fn beam(&self) -> &LightField {
        &self.beam
    }

    /// Standing-wave depth at `wavelength_nm`, E_r.
    pub fn depth(&self, wavelength_nm: f64, toggles: Toggles) -> Result<f64, TuneoutError> {
        Ok(self
            .model
            .lattice_depth(self.m_f, &self.beam.at_wavelength(wavelength_nm), toggles)?)
    }

    fn polarizability(&self, wavelength_nm: f64, toggles: Toggles) -> Result<f64, StarkError> {
        let params = crate::stark::polarization_params(&self.beam);
        self.model
            .effective_polarizability(wavelength_nm, self.m_f, params, toggles)
    }

    /// `dV0/dlambda` in E_r per pm by central difference.
    pub fn slope(&self, wavelength_nm: f64, toggles: Toggles) -> Result<f64, TuneoutError> {
        let h = self.options.slope_step_nm;
        let up = self.depth(wavelength_nm + h, toggles)?;
        let down = self.depth(wavelength_nm - h, toggles)?;
        Ok((up - down) / (2.0 * h) * 1e-3)
    }

    /// Sign changes of the effective polarizability on an even scan of the bracket.
    pub fn scan_sign_changes(&self, bracket: (f64, f64), toggles: Toggles) -> Result<Vec<(f64, f64)>, TuneoutError> {
        Ok(scan_sign_changes(
            |x| self.polarizability(x, toggles),
            bracket,
            self.options.scan_points,
        )?)
    }

    pub fn find(&self, bracket: (f64, f64), toggles: Toggles) -> Result<TuneoutResult, TuneoutError> {
        let (lo, hi) = bracket;
        let (wlo, whi) = SEARCH_WINDOW_NM;
        if !(lo < hi && lo >= wlo && hi <= whi) {
            return Err(TuneoutError::InvalidBracket { lo, hi });
        }
        if let Some(&pole) = self
            .model
            .resonance_wavelengths_nm()
            .iter()
            .find(|&&r| r > lo && r < hi)
        {
            return Err(TuneoutError::ResonanceInBracket(pole));
        }
        let root = match solve_single_root(|x| self.polarizability(x, toggles), bracket, &self.options) {
            Err(TuneoutError::NoSignChange { .. }) => {
                return Err(TuneoutError::NoSignChange {
                    lo,
                    hi,
                    v_lo: self.depth(lo, toggles)?,
                    v_hi: self.depth(hi, toggles)?,
                })
            }
            other => other?,
        };
        let delta = 10.0 * self.options.xtol_nm;
        let below = self.polarizability(root.root - delta, toggles)?;
        let above = self.polarizability(root.root + delta, toggles)?;
        Ok(TuneoutResult {
            wavelength_nm: root.root,
            slope_er_per_pm: self.slope(root.root, toggles)?,
            bracket_nm: bracket,
            toggles,
            f: self.model.f(),
            m_f: self.m_f,
            matrix_elements: self.matrix_elements,
            iterations: root.iterations,
            sign_change_verified: below * above < 0.0,
        })
    }
}

/// Sub-intervals of an even `points`-step scan of `bracket` across which `f` changes sign.
pub fn scan_sign_changes<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    bracket: (f64, f64),
    points: usize,
) -> Result<Vec<(f64, f64)>, E> {
    let n = points.max(2);
    let (lo, hi) = bracket;
    let mut out = Vec::new();
    let mut prev_x = lo;
    let mut prev = f(lo)?;
    for k in 1..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let v = f(x)?;
        if prev != 0.0 && (v == 0.0 || v.signum() != prev.signum()) {
            out.push((prev_x, x));
        }
        prev = v;
        prev_x = x;
    }
    Ok(out)
}

/// The unique zero of `f` in `bracket`; zero or several sign changes on the scan are errors.
pub fn solve_single_root<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    bracket: (f64, f64),
    options: &SolverOptions,
) -> Result<BrentRoot, TuneoutError>
where
    TuneoutError: From<E>,
    E: std::fmt::Display,
{
    let changes = scan_sign_changes(&mut f, bracket, options.scan_points)?;
    let sub = match changes.as_slice() {
        [] => {
            return Err(TuneoutError::NoSignChange {
                lo: bracket.0,
                hi: bracket.1,
                v_lo: f(bracket.0)?,
                v_hi: f(bracket.1)?,
            })
        }
        [one] => *one,
        many => return Err(TuneoutError::MultipleRoots(many.iter().map(|(a, b)| 0.5 * (a + b)).collect())),
    };
    brent(f, sub.0, sub.1, options.xtol_nm, options.max_iterations).map_err(|e| match e {
        BrentError::Function(inner) => TuneoutError::from(inner),
        other => TuneoutError::NotConverged(other.to_string()),
    })
}

/// Zero of the standing-wave lattice depth of `state` inside `bracket`.
///
/// The beam's own wavelength is ignored. Its intensity only sets the slope.
pub fn find_tuneout(
    state: &HyperfineState,
    beam: &LightField,
    data: &SpeciesData,
    bracket: (f64, f64),
    toggles: Toggles,
) -> Result<TuneoutResult, TuneoutError> {
    TuneoutSolver::new(state, beam, data)?.find(bracket, toggles)
}

/// Straight-line description of V0 near a zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub wavelength_nm: f64,
    pub slope_er_per_pm: f64,
    /// Largest `|V0 - line|` on the grid as a fraction of the full span of V0.
    pub max_relative_deviation: f64,
}

/// Least-squares line `V0 = slope (lambda - lambda_M)` through the model on `grid_nm`.
pub fn linear_model(
    grid_nm: &[f64],
    state: &HyperfineState,
    beam: &LightField,
    data: &SpeciesData,
    toggles: Toggles,
) -> Result<LinearModel, TuneoutError> {
    let solver = TuneoutSolver::new(state, beam, data)?;
    linear_model_with(&solver, grid_nm, toggles)
}

pub fn linear_model_with(solver: &TuneoutSolver, grid_nm: &[f64], toggles: Toggles) -> Result<LinearModel, TuneoutError> {
    if grid_nm.len() < 3 || grid_nm.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TuneoutError::InvalidGrid);
    }
    let values = grid_nm
        .iter()
        .map(|&x| solver.depth(x, toggles))
        .collect::<Result<Vec<_>, _>>()?;
    let (first, last) = (values[0], values[values.len() - 1]);
    if first.signum() == last.signum() {
        return Err(TuneoutError::InvalidGrid);
    }
    let n = grid_nm.len() as f64;
    let x0 = grid_nm.iter().sum::<f64>() / n;
    let ybar = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&x, &y) in grid_nm.iter().zip(&values) {
        sxy += (x - x0) * (y - ybar);
        sxx += (x - x0) * (x - x0);
    }
    let slope = sxy / sxx;
    let root = x0 - ybar / slope;
    let (vmin, vmax) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let scale = vmax - vmin;
    let deviation = grid_nm
        .iter()
        .zip(&values)
        .map(|(&x, &y)| (y - slope * (x - root)).abs())
        .fold(0.0f64, f64::max);
    Ok(LinearModel {
        wavelength_nm: root,
        slope_er_per_pm: slope * 1e-3,
        max_relative_deviation: deviation / scale,
    })
}

#[cfg(test)]
mod tests;
