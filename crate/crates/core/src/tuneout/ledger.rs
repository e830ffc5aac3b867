use rand::{rngs::StdRng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TuneoutError, TuneoutSolver, DEFAULT_BRACKET_NM, WIDE_BRACKET_NM};
use crate::atomic::{HyperfineState, MatrixElements, SpeciesData, Spin};
use crate::stark::{polarization_params, LightField, ModelOptions, Toggles};

/// A value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }
}

impl std::fmt::Display for Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} +- {}", self.value, self.sigma)
    }
}

/// Effect of a +1 sigma step of one input datum, pm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatumSensitivity {
    pub path: String,
    pub sigma: f64,
    pub source: String,
    pub d_lines_pm: f64,
    pub tensor_pm: f64,
    pub higher_states_pm: f64,
    pub core_pm: f64,
    pub vector_pm: f64,
    pub total_pm: f64,
}

/// Root of the D-line scalar model and the shift caused by each extra component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContributionLedger {
    pub dataset: String,
    pub matrix_elements: MatrixElements,
    pub f: Spin,
    pub m_f: Spin,
    pub d_lines_nm: Estimate,
    pub tensor_shift_pm: Estimate,
    pub higher_states_shift_pm: Estimate,
    pub core_shift_pm: Estimate,
    pub vector_shift_pm: Estimate,
    pub total_nm: Estimate,
    /// `total - d_lines`, pm.
    pub total_shift_pm: Estimate,
    /// `total_shift - sum of single-component shifts`, pm.
    pub additivity_residual_pm: f64,
    /// Slope of the full model at its root, E_r per pm.
    pub slope_er_per_pm: f64,
    pub sensitivities: Vec<DatumSensitivity>,
}

const STAGES: [Toggles; 6] = [
    Toggles::D_LINES_SCALAR,
    Toggles {
        tensor: true,
        ..Toggles::D_LINES_SCALAR
    },
    Toggles {
        higher_states: true,
        ..Toggles::D_LINES_SCALAR
    },
    Toggles {
        core: true,
        ..Toggles::D_LINES_SCALAR
    },
    Toggles {
        vector: true,
        ..Toggles::D_LINES_SCALAR
    },
    Toggles::ALL,
];

fn stage_roots(
    state: &HyperfineState,
    beam: &LightField,
    data: &SpeciesData,
    options: ModelOptions,
    bracket: (f64, f64),
) -> Result<[f64; 6], TuneoutError> {
    let solver = TuneoutSolver::with_options(state, beam, data, options)?;
    let mut out = [0.0; 6];
    for (slot, toggles) in out.iter_mut().zip(STAGES) {
        *slot = solver.find(bracket, toggles)?.wavelength_nm;
    }
    Ok(out)
}

/// `[d_lines, tensor, higher, core, vector, total]`; the first and last in nm, shifts in pm.
fn decompose(roots: &[f64; 6]) -> [f64; 6] {
    let base = roots[0];
    [
        base,
        (roots[1] - base) * 1e3,
        (roots[2] - base) * 1e3,
        (roots[3] - base) * 1e3,
        (roots[4] - base) * 1e3,
        roots[5],
    ]
}

pub fn default_bracket(state: &HyperfineState, beam: &LightField) -> (f64, f64) {
    if state.m_f() != Spin::ZERO && polarization_params(beam).c != 0.0 {
        WIDE_BRACKET_NM
    } else {
        DEFAULT_BRACKET_NM
    }
}

/// Ledger with the dataset's default matrix-element parametrisation.
pub fn contribution_ledger(
    state: &HyperfineState,
    beam: &LightField,
    data: &SpeciesData,
) -> Result<ContributionLedger, TuneoutError> {
    contribution_ledger_with(state, beam, data, ModelOptions::for_data(data), default_bracket(state, beam))
}

/// Ledger with uncertainties from forward sensitivities to every datum, added in quadrature.
pub fn contribution_ledger_with(
    state: &HyperfineState,
    beam: &LightField,
    data: &SpeciesData,
    options: ModelOptions,
    bracket: (f64, f64),
) -> Result<ContributionLedger, TuneoutError> {
    let central = decompose(&stage_roots(state, beam, data, options, bracket)?);
    let sensitivities = data
        .data()
        .into_par_iter()
        .filter(|(_, d)| d.sigma > 0.0)
        .map(|(path, datum)| {
            let shifted = data.with_offset(&path, datum.sigma)?;
            let p = decompose(&stage_roots(state, beam, &shifted, options, bracket)?);
            Ok(DatumSensitivity {
                d_lines_pm: (p[0] - central[0]) * 1e3,
                tensor_pm: p[1] - central[1],
                higher_states_pm: p[2] - central[2],
                core_pm: p[3] - central[3],
                vector_pm: p[4] - central[4],
                total_pm: (p[5] - central[5]) * 1e3,
                path,
                sigma: datum.sigma,
                source: datum.source,
            })
        })
        .collect::<Result<Vec<_>, TuneoutError>>()?;

    let quad = |f: &dyn Fn(&DatumSensitivity) -> f64| sensitivities.iter().map(|s| f(s).powi(2)).sum::<f64>().sqrt();
    let shift_sigma = quad(&|s| s.total_pm - s.d_lines_pm);
    let total_shift = (central[5] - central[0]) * 1e3;
    let solver = TuneoutSolver::with_options(state, beam, data, options)?;
    Ok(ContributionLedger {
        dataset: format!("{} / {}", data.species.name, options.matrix_elements),
        matrix_elements: options.matrix_elements,
        f: state.f(),
        m_f: state.m_f(),
        d_lines_nm: Estimate::new(central[0], quad(&|s| s.d_lines_pm) * 1e-3),
        tensor_shift_pm: Estimate::new(central[1], quad(&|s| s.tensor_pm)),
        higher_states_shift_pm: Estimate::new(central[2], quad(&|s| s.higher_states_pm)),
        core_shift_pm: Estimate::new(central[3], quad(&|s| s.core_pm)),
        vector_shift_pm: Estimate::new(central[4], quad(&|s| s.vector_pm)),
        total_nm: Estimate::new(central[5], quad(&|s| s.total_pm) * 1e-3),
        total_shift_pm: Estimate::new(total_shift, shift_sigma),
        additivity_residual_pm: total_shift - central[1..5].iter().sum::<f64>(),
        slope_er_per_pm: solver.slope(central[5], Toggles::ALL)?,
        sensitivities,
    })
}

/// Sample mean and spread of the D-line and total roots under Gaussian input data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpread {
    pub samples: usize,
    pub seed: u64,
    pub d_lines_nm: Estimate,
    pub total_nm: Estimate,
}

/// Cross-check of the linearised ledger uncertainties by resampling every datum.
pub fn monte_carlo_ledger(
    state: &HyperfineState,
    beam: &LightField,
    data: &SpeciesData,
    options: ModelOptions,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloSpread, TuneoutError> {
    let bracket = default_bracket(state, beam);
    let perturbed = data
        .data()
        .into_iter()
        .filter(|(_, d)| d.sigma > 0.0)
        .collect::<Vec<_>>();
    let roots = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k as u64 + 1)));
            let mut sample = data.clone();
            for (path, datum) in &perturbed {
                let delta = Normal::new(0.0, datum.sigma).expect("positive sigma").sample(&mut rng);
                sample = sample.with_offset(path, delta)?;
            }
            let solver = TuneoutSolver::with_options(state, beam, &sample, options)?;
            Ok((
                solver.find(bracket, Toggles::D_LINES_SCALAR)?.wavelength_nm,
                solver.find(bracket, Toggles::ALL)?.wavelength_nm,
            ))
        })
        .collect::<Result<Vec<_>, TuneoutError>>()?;
    let stats = |xs: Vec<f64>| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Estimate::new(mean, var.sqrt())
    };
    Ok(MonteCarloSpread {
        samples,
        seed,
        d_lines_nm: stats(roots.iter().map(|r| r.0).collect()),
        total_nm: stats(roots.iter().map(|r| r.1).collect()),
    })
}
