use serde::{Deserialize, Serialize};

use super::{bessel_j_all, depth_from_phase, KdError, MomentumPopulations};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionOptions {
    /// Atom number behind the binomial variance `P(1-P)/N` used when no sigmas are given.
    pub atom_number: f64,
    /// Detection-noise floor added in quadrature to every population error.
    pub sigma_floor: f64,
    /// Orders beyond +-1 below this population are left out of the fit.
    pub detection_threshold: f64,
    /// Scale the parameter error by `sqrt(chi2 / dof)`.
    pub scale_by_chi2: bool,
    /// Upper end of the initial Bessel-argument scan.
    pub max_phase: f64,
    pub grid_points: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            atom_number: 2.0e4,
            sigma_floor: 1e-3,
            detection_threshold: 0.0,
            scale_by_chi2: false,
            max_phase: 12.0,
            grid_points: 1200,
        }
    }
}

/// Fitted `|V0|` and fit metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    /// Absolute depth; the sign is not observable.
    pub depth_er: f64,
    pub sigma_er: f64,
    pub phase: f64,
    pub phase_sigma: f64,
    pub initial_guess_er: f64,
    pub chi2: f64,
    pub dof: usize,
    pub orders_used: Vec<i32>,
    pub tau_us: f64,
    pub recoil_hz: f64,
    pub iterations: usize,
}

struct Observation {
    order: usize,
    value: f64,
    weight: f64,
}

fn model_and_derivative(x: f64, max_order: usize) -> (Vec<f64>, Vec<f64>) {
    let j = bessel_j_all(max_order + 1, x);
    let mut p = Vec::with_capacity(max_order + 1);
    let mut dp = Vec::with_capacity(max_order + 1);
    for n in 0..=max_order {
        let below = if n == 0 { -j[1] } else { j[n - 1] };
        let dj = 0.5 * (below - j[n + 1]);
        p.push(j[n] * j[n]);
        dp.push(2.0 * j[n] * dj);
    }
    (p, dp)
}

fn chi2(obs: &[Observation], x: f64, max_order: usize) -> f64 {
    let (p, _) = model_and_derivative(x, max_order);
    obs.iter().map(|o| o.weight * (o.value - p[o.order]).powi(2)).sum()
}

/// Weighted least-squares fit of `P_N = J_N(x)^2` to the measured orders.
pub fn invert_depth(
    populations: &MomentumPopulations,
    tau_us: f64,
    recoil_hz: f64,
    options: &InversionOptions,
) -> Result<DepthEstimate, KdError> {
    populations.validate()?;
    if !(tau_us > 0.0 && recoil_hz > 0.0) {
        return Err(KdError::InvalidParameter(format!("tau {tau_us} µs, E_r {recoil_hz} Hz")));
    }
    for n in [0, 1, -1] {
        if !populations.populations.contains_key(&n) {
            return Err(KdError::MissingOrder(n));
        }
    }
    let mut obs = Vec::new();
    let mut used = Vec::new();
    for (&n, &p) in &populations.populations {
        if n.abs() > 1 && p < options.detection_threshold {
            continue;
        }
        let sigma = populations.sigma(n).unwrap_or_else(|| {
            (p * (1.0 - p).max(0.0) / options.atom_number + options.sigma_floor.powi(2)).sqrt()
        });
        if !(sigma > 0.0) {
            return Err(KdError::InvalidPopulation {
                order: n,
                reason: "zero uncertainty".into(),
            });
        }
        obs.push(Observation {
            order: n.unsigned_abs() as usize,
            value: p,
            weight: 1.0 / (sigma * sigma),
        });
        used.push(n);
    }
    let max_order = obs.iter().map(|o| o.order).max().unwrap_or(1);

    let spread = obs.iter().map(|o| o.value).fold(f64::NEG_INFINITY, f64::max)
        - obs.iter().map(|o| o.value).fold(f64::INFINITY, f64::min);
    let largest_sigma = obs.iter().map(|o| o.weight.recip().sqrt()).fold(0.0, f64::max);
    if spread <= 2.0 * largest_sigma {
        return Err(KdError::Unidentifiable(format!(
            "population spread {spread:.3e} is within noise {largest_sigma:.3e}"
        )));
    }

    // Small-argument guess: J1^2/J0^2 ~ (x/2)^2.
    let p0 = populations.get(0);
    let p1 = 0.5 * (populations.get(1) + populations.get(-1));
    let x_guess = if p0 > 0.0 { (2.0 * (p1 / p0).sqrt()).min(2.4) } else { 2.4 };
    let mut x = x_guess;
    let mut best = chi2(&obs, x, max_order);
    for k in 0..=options.grid_points {
        let xk = options.max_phase * k as f64 / options.grid_points.max(1) as f64;
        let c = chi2(&obs, xk, max_order);
        if c < best {
            best = c;
            x = xk;
        }
    }

    let mut iterations = 0;
    for iter in 1..=200 {
        iterations = iter;
        let (p, dp) = model_and_derivative(x, max_order);
        let (mut g, mut h) = (0.0, 0.0);
        for o in &obs {
            g += o.weight * dp[o.order] * (o.value - p[o.order]);
            h += o.weight * dp[o.order] * dp[o.order];
        }
        if !(h > 0.0) || !h.is_finite() {
            break;
        }
        let mut step = g / h;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = (x + step).max(0.0);
            let c = chi2(&obs, trial, max_order);
            if c <= best {
                best = c;
                let moved = (trial - x).abs();
                x = trial;
                accepted = true;
                if moved <= 1e-14 * x.max(1e-12) {
                    step = 0.0;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || step == 0.0 {
            break;
        }
    }
    let (_, dp) = model_and_derivative(x, max_order);
    let info = obs.iter().map(|o| o.weight * dp[o.order] * dp[o.order]).sum::<f64>();
    if !(info > 0.0 && info.is_finite()) {
        return Err(KdError::Unidentifiable(format!("zero sensitivity of the populations at x = {x:.4e}")));
    }
    let dof = obs.len().saturating_sub(1);
    let mut phase_sigma = info.recip().sqrt();
    if options.scale_by_chi2 && dof > 0 {
        phase_sigma *= (best / dof as f64).sqrt();
    }
    Ok(DepthEstimate {
        depth_er: depth_from_phase(x, tau_us, recoil_hz),
        sigma_er: depth_from_phase(phase_sigma, tau_us, recoil_hz),
        phase: x,
        phase_sigma,
        initial_guess_er: depth_from_phase(x_guess, tau_us, recoil_hz),
        chi2: best,
        dof,
        orders_used: used,
        tau_us,
        recoil_hz,
        iterations,
    })
}

