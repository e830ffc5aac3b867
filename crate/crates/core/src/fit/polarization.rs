//! Lattice depth of `m_F = +-1` under a normally fluctuating degree of circular polarization.

use serde::{Deserialize, Serialize};

use super::lm::{wls_fit, FitOptions, Param, Termination};
use super::{ModelFitError, ScanPoint};
use crate::atomic::{HyperfineState, SpeciesData, Spin};
use crate::stark::{LightField, Toggles};
use crate::tuneout::{Estimate, TuneoutSolver, DEFAULT_BRACKET_NM};

/// `E|g|` for `g ~ Normal(gamma, 2 sigma)`:
/// `sqrt(8 sigma^2/pi) exp(-gamma^2/(8 sigma^2)) + gamma erf(gamma/sqrt(8 sigma^2))`.
///
/// `sigma` is half the standard deviation of the potential; `sigma = 0` gives `|gamma|`.
pub fn fluctuating_pol_potential(gamma: f64, sigma: f64) -> f64 {
    let sigma = sigma.abs();
    if sigma == 0.0 {
        return gamma.abs();
    }
    let width = (8.0 * sigma * sigma).sqrt();
    let u = gamma / width;
    if u.abs() > 40.0 {
        return gamma.abs();
    }
    (8.0 * sigma * sigma / std::f64::consts::PI).sqrt() * (-u * u).exp() + gamma * libm::erf(u)
}

/// Derivatives of [`fluctuating_pol_potential`] with respect to `gamma` and `sigma`.
pub fn fluctuating_pol_gradient(gamma: f64, sigma: f64) -> (f64, f64) {
    let sigma = sigma.abs();
    if sigma == 0.0 {
        let slope = if gamma == 0.0 { 0.0 } else { gamma.signum() };
        return (slope, 0.0);
    }
    let u = gamma / (8.0f64.sqrt() * sigma);
    if u.abs() > 40.0 {
        return (gamma.signum(), 0.0);
    }
    (libm::erf(u), (8.0 / std::f64::consts::PI).sqrt() * (-u * u).exp())
}

/// Which `m_F` weight multiplies `A alpha_v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorWeight {
    /// `m_F / 2F`, as in the Stark-shift formula.
    #[default]
    HalfF,
    /// `m_F / F`.
    F,
}

impl VectorWeight {
    pub fn weight(self, f: Spin, m_f: Spin) -> f64 {
        let base = crate::stark::vector_weight(f, m_f);
        match self {
            VectorWeight::HalfF => base,
            VectorWeight::F => 2.0 * base,
        }
    }
}

/// Wavelength dependence of the `m_F = +-1` lattice depth near the `m_F = 0` zero.
///
/// With slope `s` (E_r/pm) the potential at fixed circularity `A` is
/// `gamma = s [(lambda - lambda_M - t) + A w r]`, where `t` is the tensor offset of the
/// `|m_F| = 1` zero and `r = alpha_v / (d alpha_st / d lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationModel {
    pub lambda_m_nm: f64,
    pub f: Spin,
    pub tensor_offset_pm: f64,
    pub ratio_pm: f64,
    pub weight: VectorWeight,
}

impl PolarizationModel {
    /// Offsets evaluated for linear light along the quantization axis.
    pub fn from_species(
        state: &HyperfineState,
        data: &SpeciesData,
        lambda_m_nm: f64,
        weight: VectorWeight,
    ) -> Result<Self, ModelFitError> {
        let linear = LightField::linear(lambda_m_nm, 1.0);
        let m0 = TuneoutSolver::new(&state.with_m_f(Spin::ZERO)?, &linear, data)?;
        let m1 = TuneoutSolver::new(&state.with_m_f(Spin::ONE)?, &linear, data)?;
        let root0 = m0.find(DEFAULT_BRACKET_NM, Toggles::ALL)?.wavelength_nm;
        let root1 = m1.find(DEFAULT_BRACKET_NM, Toggles::ALL)?.wavelength_nm;
        let model = m1.model();
        let params = crate::stark::polarization_params(&linear);
        let h = 1e-3;
        let up = model.effective_polarizability(lambda_m_nm + h, Spin::ONE, params, Toggles::ALL)?;
        let down = model.effective_polarizability(lambda_m_nm - h, Spin::ONE, params, Toggles::ALL)?;
        let derivative_per_pm = (up - down) / (2.0 * h) * 1e-3;
        let vector = model.d_line(lambda_m_nm)?.vector;
        Ok(Self {
            lambda_m_nm,
            f: state.f(),
            tensor_offset_pm: (root1 - root0) * 1e3,
            ratio_pm: vector / derivative_per_pm,
            weight,
        })
    }

    fn w(&self, m_f: Spin) -> f64 {
        self.weight.weight(self.f, m_f)
    }

    /// Potential without fluctuations at circularity `a`, E_r.
    pub fn gamma(&self, wavelength_nm: f64, m_f: Spin, slope: f64, a: f64) -> f64 {
        let detuning = (wavelength_nm - self.lambda_m_nm) * 1e3 - self.tensor_offset_pm;
        slope * (detuning + a * self.w(m_f) * self.ratio_pm)
    }

    /// Closed-form `sigma` for a circularity spread `sigma_a`.
    pub fn sigma(&self, m_f: Spin, slope: f64, sigma_a: f64) -> f64 {
        0.5 * (slope * self.w(m_f) * self.ratio_pm * sigma_a).abs()
    }

    /// Expected `|V0|`, E_r.
    pub fn potential(&self, wavelength_nm: f64, m_f: Spin, slope: f64, a0: f64, sigma_a: f64) -> f64 {
        fluctuating_pol_potential(
            self.gamma(wavelength_nm, m_f, slope, a0),
            self.sigma(m_f, slope, sigma_a),
        )
    }

    /// Wavelength of smallest `|V0|` for circularity `a0`.
    pub fn branch_minimum_nm(&self, m_f: Spin, a0: f64) -> f64 {
        self.lambda_m_nm + (self.tensor_offset_pm - a0 * self.w(m_f) * self.ratio_pm) * 1e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationFit {
    pub a0: Estimate,
    pub sigma_a: Estimate,
    pub slope_er_per_pm: Estimate,
    pub lambda_m_nm: Estimate,
    pub lambda_m_free: bool,
    /// Parameter order: slope, a0, sigma_a, lambda_m offset (pm).
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub sigma_a_at_bound: bool,
    pub model: PolarizationModel,
    pub iterations: usize,
    pub termination: Termination,
}

impl PolarizationFit {
    /// Expected `|V0|` of `m_f` at the `m_F = 0` zero with the fitted parameters, for `cos theta_k = 1`.
    pub fn vector_amplitude(&self, m_f: Spin) -> f64 {
        self.model.potential(
            self.lambda_m_nm.value,
            m_f,
            self.slope_er_per_pm.value,
            self.a0.value,
            self.sigma_a.value,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PolarizationFitOptions {
    pub fit_lambda_m: bool,
    /// Starting `(slope, a0, sigma_a)`; estimated from the data when absent.
    pub initial: Option<[f64; 3]>,
    pub fit: FitOptions,
}

fn initial_guess(points: &[ScanPoint], model: &PolarizationModel) -> [f64; 3] {
    let minimum = |m: Spin| {
        points
            .iter()
            .filter(|p| p.m_f == m)
            .min_by(|a, b| a.value_er.total_cmp(&b.value_er))
            .expect("branch checked")
    };
    let (plus, minus) = (minimum(Spin::ONE), minimum(-Spin::ONE));
    let mut ratios: Vec<f64> = points
        .iter()
        .filter_map(|p| {
            let centre = if p.m_f == Spin::ONE { plus.control } else { minus.control };
            let d = (p.control - centre).abs() * 1e3;
            (d > 1e-6).then(|| p.value_er / d)
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let slope = ratios.get(ratios.len() * 3 / 4).copied().unwrap_or(1.0).max(1e-6);
    let w = model.weight.weight(model.f, Spin::ONE);
    let a0 = -(plus.control - minus.control) * 1e3 / (2.0 * w * model.ratio_pm);
    let floor = 0.5 * (plus.value_er + minus.value_er);
    let sigma_eq7 = floor / (8.0 / std::f64::consts::PI).sqrt();
    let sigma_a = (2.0 * sigma_eq7 / (slope * w * model.ratio_pm).abs()).max(1e-4);
    [slope, a0.clamp(-0.5, 0.5), sigma_a]
}

/// Joint fit of both `m_F = +-1` branches for slope, `A0` and `sigma_A`.
pub fn fit_polarization(
    points: &[ScanPoint],
    model: &PolarizationModel,
    options: &PolarizationFitOptions,
) -> Result<PolarizationFit, ModelFitError> {
    for m in [Spin::ONE, -Spin::ONE] {
        if !points.iter().any(|p| p.m_f == m) {
            return Err(ModelFitError::MissingBranch(m));
        }
    }
    if let Some(p) = points.iter().find(|p| p.m_f.abs() != Spin::ONE) {
        return Err(ModelFitError::InvalidData(format!("point with m_F = {}", p.m_f)));
    }
    let init = options.initial.unwrap_or_else(|| initial_guess(points, model));
    let y: Vec<f64> = points.iter().map(|p| p.value_er).collect();
    let sigma: Vec<f64> = points.iter().map(|p| p.sigma_er).collect();
    let eval = |p: &[f64], out: &mut [f64]| {
        let shifted = PolarizationModel {
            lambda_m_nm: model.lambda_m_nm + p[3] * 1e-3,
            ..*model
        };
        for (o, pt) in out.iter_mut().zip(points) {
            *o = shifted.potential(pt.control, pt.m_f, p[0], p[1], p[2]);
        }
    };
    let mut lambda_param = Param::new("lambda_m_offset_pm", 0.0).with_scale(1.0);
    if !options.fit_lambda_m {
        lambda_param = lambda_param.fixed();
    }
    let params = [
        Param::new("slope", init[0]).bounded(0.0, f64::INFINITY),
        Param::new("a0", init[1]).bounded(-1.0, 1.0).with_scale(1e-3),
        Param::new("sigma_a", init[2]).bounded(0.0, 1.0).with_scale(1e-3),
        lambda_param,
    ];
    let fit = wls_fit(&eval, &y, &sigma, &params, &options.fit)?;
    let est = |j: usize| Estimate::new(fit.params[j], fit.sigmas[j]);
    Ok(PolarizationFit {
        a0: est(1),
        sigma_a: est(2),
        slope_er_per_pm: est(0),
        lambda_m_nm: Estimate::new(model.lambda_m_nm + fit.params[3] * 1e-3, fit.sigmas[3] * 1e-3),
        lambda_m_free: options.fit_lambda_m,
        covariance: fit.covariance.clone(),
        chi2: fit.chi2,
        dof: fit.dof,
        sigma_a_at_bound: fit.at_bound[2],
        model: *model,
        iterations: fit.iterations,
        termination: fit.termination,
    })
}
