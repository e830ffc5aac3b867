//! Weighted nonlinear least squares by a projected Levenberg-Marquardt iteration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("no convergence after {iterations} iterations (chi2 = {chi2:.6e})")]
    NotConverged { iterations: usize, chi2: f64 },
    #[error("Jacobian is singular: parameter '{0}' has no effect on the model")]
    SingularJacobian(String),
    #[error("non-finite residual at the initial guess (point {0})")]
    NonFinite(usize),
    #[error("invalid fit input: {0}")]
    InvalidInput(String),
}

/// One fit parameter with its bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub fixed: bool,
    /// Typical magnitude; sets the finite-difference step for parameters near zero.
    pub scale: f64,
}

impl Param {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            fixed: false,
            scale: if value != 0.0 { value.abs() } else { 1.0 },
        }
    }

    pub fn bounded(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn fixed(mut self) -> Self {
        self.fixed = true;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Step tolerance relative to `|p| + scale` of every parameter.
    pub xtol: f64,
    /// Stop after two accepted steps in a row that each lower chi2 by less than this fraction.
    pub ftol: f64,
    /// Relative finite-difference step.
    pub rel_step: f64,
    /// Multiply the covariance by the reduced chi-square.
    pub scale_covariance: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            xtol: 1e-10,
            ftol: 1e-13,
            rel_step: 1e-6,
            scale_covariance: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub chi2: f64,
    pub lambda: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    StepTolerance,
    /// Successive accepted steps stopped lowering chi2.
    ChiSquareTolerance,
    ZeroResidual,
    /// Damping grew without bound: no direction lowers chi2 at machine precision.
    NoFurtherDecrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// One-sigma errors; 0 for fixed parameters, NaN where the curvature vanishes.
    pub sigmas: Vec<f64>,
    /// Row-major covariance over all parameters.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub at_bound: Vec<bool>,
    pub log: Vec<IterationRecord>,
}

impl FitResult {
    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.params[self.index(name).expect("unknown parameter")]
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.sigmas[self.index(name).expect("unknown parameter")]
    }
}

/// Model predictions for all data points at the given parameters.
pub trait Model {
    fn eval(&self, params: &[f64], out: &mut [f64]);

    /// Analytic `d model_i / d param_j`; `false` falls back to finite differences.
    fn jacobian(&self, _params: &[f64], _out: &mut DMatrix<f64>) -> bool {
        false
    }
}

impl<F: Fn(&[f64], &mut [f64])> Model for F {
    fn eval(&self, params: &[f64], out: &mut [f64]) {
        self(params, out)
    }
}

struct Problem<'a, M: Model> {
    model: &'a M,
    y: &'a [f64],
    inv_sigma: Vec<f64>,
    params: &'a [Param],
    rel_step: f64,
}

impl<M: Model> Problem<'_, M> {
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        self.model.eval(p, out);
        for ((r, &y), &w) in out.iter_mut().zip(self.y).zip(&self.inv_sigma) {
            *r = (y - *r) * w;
        }
    }

    fn chi2(&self, p: &[f64], scratch: &mut [f64]) -> f64 {
        self.residuals(p, scratch);
        scratch.iter().map(|r| r * r).sum()
    }

    /// Jacobian of the weighted residuals.
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.y.len();
        let k = p.len();
        let mut jac = DMatrix::zeros(n, k);
        if !self.model.jacobian(p, &mut jac) {
            let mut up = vec![0.0; n];
            let mut down = vec![0.0; n];
            let mut q = p.to_vec();
            for j in 0..k {
                if self.params[j].fixed {
                    continue;
                }
                let h = self.rel_step * p[j].abs().max(self.params[j].scale.abs()).max(f64::MIN_POSITIVE);
                let hi = (p[j] + h).min(self.params[j].upper);
                let lo = (p[j] - h).max(self.params[j].lower);
                q[j] = hi;
                self.model.eval(&q, &mut up);
                q[j] = lo;
                self.model.eval(&q, &mut down);
                q[j] = p[j];
                for i in 0..n {
                    jac[(i, j)] = (up[i] - down[i]) / (hi - lo);
                }
            }
        }
        for i in 0..n {
            for j in 0..k {
                jac[(i, j)] *= -self.inv_sigma[i];
            }
        }
        jac
    }
}

fn clamp(p: &mut [f64], params: &[Param]) {
    for (v, spec) in p.iter_mut().zip(params) {
        *v = v.clamp(spec.lower, spec.upper);
    }
}

/// Minimises `sum ((y_i - model_i(p)) / sigma_i)^2` over the free parameters.
pub fn wls_fit<M: Model>(
    model: &M,
    y: &[f64],
    sigma: &[f64],
    params: &[Param],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    if y.len() != sigma.len() {
        return Err(FitError::InvalidInput(format!("{} values, {} sigmas", y.len(), sigma.len())));
    }
    if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(FitError::InvalidInput(format!("sigma[{i}] = {}", sigma[i])));
    }
    for p in params {
        if !(p.lower <= p.upper) || !p.value.is_finite() {
            return Err(FitError::InvalidInput(format!("parameter '{}'", p.name)));
        }
    }
    let problem = Problem {
        model,
        y,
        inv_sigma: sigma.iter().map(|s| 1.0 / s).collect(),
        params,
        rel_step: options.rel_step,
    };
    let n = y.len();
    let k = params.len();
    let free: Vec<usize> = (0..k).filter(|&j| !params[j].fixed).collect();
    if free.len() > n {
        return Err(FitError::InvalidInput(format!("{} free parameters for {n} points", free.len())));
    }

    let mut p: Vec<f64> = params.iter().map(|q| q.value).collect();
    clamp(&mut p, params);
    let mut scratch = vec![0.0; n];
    problem.residuals(&p, &mut scratch);
    if let Some(i) = scratch.iter().position(|r| !r.is_finite()) {
        return Err(FitError::NonFinite(i));
    }
    let mut chi2: f64 = scratch.iter().map(|r| r * r).sum();

    let jac0 = problem.jacobian(&p);
    for &j in &free {
        if jac0.column(j).norm() == 0.0 {
            return Err(FitError::SingularJacobian(params[j].name.clone()));
        }
    }

    let mut lambda = 1e-3;
    let mut log = Vec::new();
    let mut termination = None;
    let mut iterations = 0;
    let mut jac = jac0;
    let mut fresh = true;
    let mut stalled = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        if chi2 == 0.0 {
            termination = Some(Termination::ZeroResidual);
            break;
        }
        if !fresh {
            jac = problem.jacobian(&p);
        }
        fresh = false;
        problem.residuals(&p, &mut scratch);
        let r = DVector::from_column_slice(&scratch);
        let grad = jac.transpose() * &r;
        // Parameters pinned at a bound with the descent direction pointing outward.
        let active: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&j| {
                let descent = -grad[j];
                !((p[j] <= params[j].lower && descent < 0.0) || (p[j] >= params[j].upper && descent > 0.0))
            })
            .collect();
        if active.is_empty() {
            termination = Some(Termination::StepTolerance);
            break;
        }
        let ja = jac.select_columns(active.iter());
        let jtj = ja.transpose() * &ja;
        let g = ja.transpose() * &r;
        let diag_floor = jtj.diagonal().max() * 1e-15;
        loop {
            let mut a = jtj.clone();
            for d in 0..active.len() {
                a[(d, d)] += lambda * jtj[(d, d)].max(diag_floor);
            }
            let step = match a.cholesky() {
                Some(ch) => -ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        break;
                    }
                    continue;
                }
            };
            let mut trial = p.clone();
            for (d, &j) in active.iter().enumerate() {
                trial[j] += step[d];
            }
            clamp(&mut trial, params);
            let step_norm = trial.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let trial_chi2 = problem.chi2(&trial, &mut scratch);
            let accepted = trial_chi2.is_finite() && trial_chi2 <= chi2;
            log.push(IterationRecord {
                iteration: iterations,
                chi2: if accepted { trial_chi2 } else { chi2 },
                lambda,
                step_norm,
                accepted,
            });
            if accepted {
                let small = (0..k).all(|j| (trial[j] - p[j]).abs() <= options.xtol * (p[j].abs() + params[j].scale.abs()));
                stalled = if chi2 - trial_chi2 <= options.ftol * chi2 { stalled + 1 } else { 0 };
                p = trial;
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                if small {
                    termination = Some(Termination::StepTolerance);
                } else if stalled >= 2 {
                    termination = Some(Termination::ChiSquareTolerance);
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
        }
        if lambda > 1e16 {
            termination = Some(Termination::NoFurtherDecrease);
            break;
        }
        if termination.is_some() {
            break;
        }
    }
    let termination = termination.ok_or(FitError::NotConverged { iterations, chi2 })?;

    let jac = problem.jacobian(&p);
    let at_bound: Vec<bool> = (0..k)
        .map(|j| {
            let q = &params[j];
            let near = |b: f64| b.is_finite() && (p[j] - b).abs() <= 1e-8 * (b.abs() + q.scale);
            !q.fixed && (p[j] <= q.lower || p[j] >= q.upper || near(q.lower) || near(q.upper))
        })
        .collect();
    let dof = n.saturating_sub(free.len());
    let mut covariance = vec![vec![0.0; k]; k];
    let mut sigmas = vec![0.0; k];
    let invert = |cols: &[usize]| -> Option<DMatrix<f64>> {
        let jc = jac.select_columns(cols.iter());
        (jc.transpose() * &jc).try_inverse().filter(|m| m.iter().all(|v| v.is_finite()))
    };
    let scale = if options.scale_covariance && dof > 0 {
        chi2 / dof as f64
    } else {
        1.0
    };
    let (cols, inv) = match invert(&free) {
        Some(inv) if (0..free.len()).all(|d| inv[(d, d)] > 0.0) => (free.clone(), Some(inv)),
        _ => {
            let flat = |j: usize| jac.column(j).iter().all(|&v| v == 0.0);
            let dropped = |j: usize| at_bound[j] || flat(j);
            let interior: Vec<usize> = free.iter().copied().filter(|&j| !dropped(j)).collect();
            for &j in &free {
                if dropped(j) {
                    sigmas[j] = f64::NAN;
                }
            }
            let inv = invert(&interior);
            if inv.is_none() {
                return Err(FitError::SingularJacobian(
                    interior.iter().map(|&j| params[j].name.as_str()).collect::<Vec<_>>().join(", "),
                ));
            }
            (interior, inv)
        }
    };
    let inv = inv.expect("checked above");
    for (a, &ja) in cols.iter().enumerate() {
        for (b, &jb) in cols.iter().enumerate() {
            covariance[ja][jb] = inv[(a, b)] * scale;
        }
        sigmas[ja] = covariance[ja][ja].sqrt();
    }
    Ok(FitResult {
        names: params.iter().map(|q| q.name.clone()).collect(),
        params: p,
        sigmas,
        covariance,
        chi2,
        dof,
        iterations,
        termination,
        at_bound,
        log,
    })
}
