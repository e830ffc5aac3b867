//! Tune-out wavelength from a scan of `|V0|` against wavelength.

use serde::{Deserialize, Serialize};

use super::lm::{wls_fit, FitOptions, Param, Termination};
use super::{ModelFitError, ScanPoint};
use crate::tuneout::Estimate;

/// Shape of `|V0|` around the zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VeeShape {
    /// One slope on both sides.
    Symmetric,
    /// Independent slopes below and above the zero; absorbs the curvature of `V0(lambda)`.
    #[default]
    TwoSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneoutScanFit {
    pub lambda_m_nm: Estimate,
    /// Mean of the two slopes for [`VeeShape::TwoSlope`].
    pub slope_er_per_pm: Estimate,
    pub slope_below_er_per_pm: Estimate,
    pub slope_above_er_per_pm: Estimate,
    pub shape: VeeShape,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    pub termination: Termination,
}

/// `|V0| = s |lambda - lambda_M|` (E_r, pm) with `s >= 0`.
pub fn vee_model(wavelength_nm: f64, lambda_m_nm: f64, slope_er_per_pm: f64) -> f64 {
    slope_er_per_pm * ((wavelength_nm - lambda_m_nm) * 1e3).abs()
}

/// Slope `below` for `lambda < lambda_M`, `above` otherwise.
pub fn vee_model_two_slope(wavelength_nm: f64, lambda_m_nm: f64, below: f64, above: f64) -> f64 {
    let d = (wavelength_nm - lambda_m_nm) * 1e3;
    if d < 0.0 {
        -below * d
    } else {
        above * d
    }
}

/// Weighted closed-form slopes at a fixed zero and the resulting chi2.
fn closed_form(points: &[ScanPoint], lambda_m_nm: f64, shape: VeeShape) -> (f64, f64, f64) {
    let mut sums = [[0.0; 2]; 2];
    for p in points {
        let d = (p.control - lambda_m_nm) * 1e3;
        let side = usize::from(d >= 0.0 || shape == VeeShape::Symmetric);
        let w = p.sigma_er.powi(-2);
        sums[side][0] += w * d.abs() * p.value_er;
        sums[side][1] += w * d * d;
    }
    let slope = |s: [f64; 2]| if s[1] > 0.0 { (s[0] / s[1]).max(0.0) } else { 0.0 };
    let (below, above) = match shape {
        VeeShape::Symmetric => (slope(sums[1]), slope(sums[1])),
        VeeShape::TwoSlope => (slope(sums[0]), slope(sums[1])),
    };
    let chi2 = points
        .iter()
        .map(|p| ((p.value_er - vee_model_two_slope(p.control, lambda_m_nm, below, above)) / p.sigma_er).powi(2))
        .sum();
    (below, above, chi2)
}

/// Fit of the V-shaped scan. The zero must lie inside the scanned range, with points on both sides.
pub fn fit_tuneout_scan(points: &[ScanPoint], options: &FitOptions) -> Result<TuneoutScanFit, ModelFitError> {
    fit_tuneout_scan_with(points, VeeShape::default(), options)
}

pub fn fit_tuneout_scan_with(points: &[ScanPoint], shape: VeeShape, options: &FitOptions) -> Result<TuneoutScanFit, ModelFitError> {
    if points.len() < 4 {
        return Err(ModelFitError::InvalidData(format!("{} scan points, need at least 4", points.len())));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.control.is_finite() && p.value_er.is_finite() && p.sigma_er > 0.0))
    {
        return Err(ModelFitError::InvalidData(format!("bad scan point at {} nm", p.control)));
    }
    let lo = points.iter().map(|p| p.control).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.control).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return Err(ModelFitError::Unidentifiable("scan covers a single wavelength".into()));
    }
    let n = 400;
    let (mut centre, mut best) = (lo, f64::INFINITY);
    for k in 0..=n {
        let l = lo + (hi - lo) * k as f64 / n as f64;
        let (_, _, c) = closed_form(points, l, shape);
        if c < best {
            best = c;
            centre = l;
        }
    }
    let (below0, above0, _) = closed_form(points, centre, shape);
    let y: Vec<f64> = points.iter().map(|p| p.value_er).collect();
    let sigma: Vec<f64> = points.iter().map(|p| p.sigma_er).collect();
    let two = shape == VeeShape::TwoSlope;
    let eval = |p: &[f64], out: &mut [f64]| {
        let above = if two { p[2] } else { p[1] };
        for (o, pt) in out.iter_mut().zip(points) {
            *o = vee_model_two_slope(pt.control, centre + p[0] * 1e-3, p[1], above);
        }
    };
    let mut params = vec![
        Param::new("lambda_m_offset_pm", 0.0).with_scale(1.0),
        Param::new(if two { "slope_below" } else { "slope" }, below0.max(1e-9)).bounded(0.0, f64::INFINITY),
    ];
    if two {
        params.push(Param::new("slope_above", above0.max(1e-9)).bounded(0.0, f64::INFINITY));
    }
    let fit = wls_fit(&eval, &y, &sigma, &params, options)?;
    let lambda = centre + fit.params[0] * 1e-3;
    if lambda < lo || lambda > hi {
        return Err(ModelFitError::Unidentifiable(format!(
            "fitted zero {lambda:.6} nm lies outside the scan {lo:.6}-{hi:.6} nm"
        )));
    }
    if two && (!points.iter().any(|p| p.control < lambda) || !points.iter().any(|p| p.control > lambda)) {
        return Err(ModelFitError::Unidentifiable("no points on one side of the fitted zero".into()));
    }
    let below = Estimate::new(fit.params[1], fit.sigmas[1]);
    let above = if two { Estimate::new(fit.params[2], fit.sigmas[2]) } else { below };
    let mean = if two {
        let c = fit.covariance[1][2];
        Estimate::new(
            0.5 * (below.value + above.value),
            0.5 * (below.sigma.powi(2) + above.sigma.powi(2) + 2.0 * c).max(0.0).sqrt(),
        )
    } else {
        below
    };
    Ok(TuneoutScanFit {
        lambda_m_nm: Estimate::new(lambda, fit.sigmas[0] * 1e-3),
        slope_er_per_pm: mean,
        slope_below_er_per_pm: below,
        slope_above_er_per_pm: above,
        shape,
        chi2: fit.chi2,
        dof: fit.dof,
        iterations: fit.iterations,
        termination: fit.termination,
    })
}
