//! Vertical binning of the `m_F` bands and the multi-Gaussian fit of the
//! diffraction orders (BEC plus thermal component, shared order spacing).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ImagingError, OdImage, ShotGeometry};
use crate::fit::{wls_fit, FitOptions, Model, Param};
use crate::kd::MomentumPopulations;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandLayout {
    pub m_f: i32,
    /// Rows `[start, end)` summed into the profile.
    pub rows: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakLayout {
    pub bands: Vec<BandLayout>,
    pub center_x: f64,
    pub spacing_px: f64,
    pub max_order: i32,
    pub bec_sigma_px: f64,
    /// Starting thermal-to-BEC width ratio.
    pub thermal_ratio: f64,
    /// Lower bound of the width ratio.
    pub min_thermal_ratio: f64,
}

impl PeakLayout {
    pub fn from_geometry(g: &ShotGeometry, max_order: i32) -> Self {
        Self {
            bands: g
                .bands
                .iter()
                .map(|b| BandLayout {
                    m_f: b.m_f,
                    rows: g.band_rows(b),
                })
                .collect(),
            center_x: g.center_x,
            spacing_px: g.spacing_px,
            max_order: max_order.min(g.max_visible_order()),
            bec_sigma_px: g.bec_sigma_px,
            thermal_ratio: 3.0,
            min_thermal_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: i32,
    pub center_px: f64,
    pub bec_width_px: f64,
    pub bec_area: f64,
    pub bec_area_sigma: f64,
    pub thermal_width_px: f64,
    pub thermal_area: f64,
    pub thermal_area_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFitResult {
    pub m_f: i32,
    pub orders: Vec<OrderFit>,
    pub spacing_px: f64,
    pub baseline: f64,
    /// Parameter order: center, spacing, BEC width, width ratio, baseline, BEC areas, thermal areas.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub residual_rms: f64,
    /// False when the width ratio ends on its bound or the thermal areas carry no information.
    pub thermal_split_identified: bool,
    pub excluded_pixels: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandExtraction {
    pub m_f: i32,
    pub populations: MomentumPopulations,
    pub fit: PeakFitResult,
}

/// Column sums over `rows`, rescaled for clamped pixels. Columns with no valid pixel are `None`.
pub fn bin_band(od: &OdImage, rows: (usize, usize)) -> Result<(Vec<Option<f64>>, usize), ImagingError> {
    if rows.0 >= rows.1 || rows.1 > od.height() {
        return Err(ImagingError::Region(format!("band rows {rows:?} outside height {}", od.height())));
    }
    let height = (rows.1 - rows.0) as f64;
    let mut excluded = 0;
    let profile = (0..od.width())
        .map(|x| {
            let (mut sum, mut n) = (0.0, 0usize);
            for y in rows.0..rows.1 {
                if od.is_valid(x, y) {
                    sum += od.get(x, y);
                    n += 1;
                } else {
                    excluded += 1;
                }
            }
            (n > 0).then(|| sum * height / n as f64)
        })
        .collect();
    Ok((profile, excluded))
}

/// Weak orders pinned near zero area converge slowly in the projected steps.
pub const PEAK_FIT_MIN_ITERATIONS: usize = 2000;

/// Relative chi2 change below which the peak fit stops.
pub const PEAK_FIT_FTOL: f64 = 1e-10;

const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

struct PeakModel<'a> {
    x: &'a [f64],
    orders: &'a [i32],
}

impl PeakModel<'_> {
    fn split(&self, p: &[f64]) -> (f64, f64, f64, f64, f64) {
        (p[0], p[1], p[2], p[3], p[4])
    }
}

impl Model for PeakModel<'_> {
    fn eval(&self, p: &[f64], out: &mut [f64]) {
        let (c0, d, sb, ratio, base) = self.split(p);
        let st = sb * ratio;
        let m = self.orders.len();
        for (o, &x) in out.iter_mut().zip(self.x) {
            let mut v = base;
            for (j, &n) in self.orders.iter().enumerate() {
                let c = c0 + n as f64 * d;
                let (ub, ut) = ((x - c) / sb, (x - c) / st);
                v += p[5 + j] * (-0.5 * ub * ub).exp() / (sb * SQRT_2PI) + p[5 + m + j] * (-0.5 * ut * ut).exp() / (st * SQRT_2PI);
            }
            *o = v;
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) -> bool {
        let (c0, d, sb, ratio, _) = self.split(p);
        let st = sb * ratio;
        let m = self.orders.len();
        jac.fill(0.0);
        for (i, &x) in self.x.iter().enumerate() {
            jac[(i, 4)] = 1.0;
            for (j, &n) in self.orders.iter().enumerate() {
                let c = c0 + n as f64 * d;
                let (ub, ut) = ((x - c) / sb, (x - c) / st);
                let gb = (-0.5 * ub * ub).exp() / (sb * SQRT_2PI);
                let gt = (-0.5 * ut * ut).exp() / (st * SQRT_2PI);
                let (a, t) = (p[5 + j], p[5 + m + j]);
                let dc = a * gb * ub / sb + t * gt * ut / st;
                let dst = t * gt * (ut * ut - 1.0) / st;
                jac[(i, 0)] += dc;
                jac[(i, 1)] += n as f64 * dc;
                jac[(i, 2)] += a * gb * (ub * ub - 1.0) / sb + dst * ratio;
                jac[(i, 3)] += dst * sb;
                jac[(i, 5 + j)] = gb;
                jac[(i, 5 + m + j)] = gt;
            }
        }
        true
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

fn fit_band(od: &OdImage, band: &BandLayout, layout: &PeakLayout, options: &FitOptions) -> Result<BandExtraction, ImagingError> {
    let (profile, excluded) = bin_band(od, band.rows)?;
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i as f64, v)))
        .unzip();
    let orders: Vec<i32> = (-layout.max_order..=layout.max_order)
        .filter(|&n| {
            let c = layout.center_x + n as f64 * layout.spacing_px;
            c >= 0.0 && c < od.width() as f64
        })
        .collect();
    if x.len() < 5 + 2 * orders.len() + 1 {
        return Err(ImagingError::Unidentifiable(format!(
            "m_F = {}: {} usable columns for {} orders",
            band.m_f,
            x.len(),
            orders.len()
        )));
    }
    let reach = 3.0 * layout.bec_sigma_px * layout.thermal_ratio;
    let far: Vec<f64> = x
        .iter()
        .zip(&y)
        .filter(|(&xi, _)| orders.iter().all(|&n| (xi - layout.center_x - n as f64 * layout.spacing_px).abs() > reach))
        .map(|(_, &v)| v)
        .collect();
    let base0 = median(far).unwrap_or(0.0);
    let window = (2.5 * layout.bec_sigma_px).max(1.0);
    let areas0: Vec<f64> = orders
        .iter()
        .map(|&n| {
            let c = layout.center_x + n as f64 * layout.spacing_px;
            x.iter()
                .zip(&y)
                .filter(|(&xi, _)| (xi - c).abs() <= window)
                .map(|(_, &v)| v - base0)
                .sum::<f64>()
                .max(0.0)
        })
        .collect();
    let mut params = vec![
        Param::new("center", layout.center_x).with_scale(1.0),
        Param::new("spacing", layout.spacing_px).bounded(0.5 * layout.spacing_px, 1.5 * layout.spacing_px),
        Param::new("bec_width", layout.bec_sigma_px).bounded(0.3, f64::INFINITY),
        Param::new("width_ratio", layout.thermal_ratio.max(layout.min_thermal_ratio))
            .bounded(layout.min_thermal_ratio, f64::INFINITY),
        Param::new("baseline", base0).with_scale(1.0),
    ];
    let area_scale = areas0.iter().cloned().fold(1e-3, f64::max);
    for (&n, &a) in orders.iter().zip(&areas0) {
        params.push(Param::new(format!("bec_area_{n}"), 0.9 * a).bounded(0.0, f64::INFINITY).with_scale(area_scale));
    }
    for (&n, &a) in orders.iter().zip(&areas0) {
        params.push(
            Param::new(format!("thermal_area_{n}"), 0.1 * a + 1e-3 * area_scale)
                .bounded(0.0, f64::INFINITY)
                .with_scale(area_scale),
        );
    }
    let model = PeakModel { x: &x, orders: &orders };
    let ones = vec![1.0; y.len()];
    let opts = FitOptions {
        scale_covariance: true,
        max_iterations: options.max_iterations.max(PEAK_FIT_MIN_ITERATIONS),
        ftol: options.ftol.max(PEAK_FIT_FTOL),
        ..*options
    };
    let fit = wls_fit(&model, &y, &ones, &params, &opts).map_err(|source| ImagingError::PeakFit { m_f: band.m_f, source })?;
    let m = orders.len();
    let p = &fit.params;
    let residual_rms = if fit.dof > 0 { (fit.chi2 / fit.dof as f64).sqrt() } else { 0.0 };
    let bec_width = p[2];
    let thermal_width = p[2] * p[3];
    // Gaussian-amplitude uncertainty for a known shape, used where the covariance is undefined.
    let fallback = |w: f64| residual_rms * (2.0 * std::f64::consts::PI.sqrt() * w).sqrt();
    let sigma_of = |j: usize, w: f64| {
        let s = fit.sigmas[j];
        if s.is_finite() {
            s
        } else {
            fallback(w)
        }
    };
    let order_fits: Vec<OrderFit> = orders
        .iter()
        .enumerate()
        .map(|(j, &n)| OrderFit {
            order: n,
            center_px: p[0] + n as f64 * p[1],
            bec_width_px: bec_width,
            bec_area: p[5 + j],
            bec_area_sigma: sigma_of(5 + j, bec_width),
            thermal_width_px: thermal_width,
            thermal_area: p[5 + m + j],
            thermal_area_sigma: sigma_of(5 + m + j, thermal_width),
        })
        .collect();
    let thermal_split_identified = !fit.at_bound[3] && fit.sigmas[3].is_finite();

    let total: f64 = order_fits.iter().map(|o| o.bec_area).sum();
    if !(total > 0.0) {
        return Err(ImagingError::Unidentifiable(format!("m_F = {}: no BEC signal", band.m_f)));
    }
    let mut pops = BTreeMap::new();
    let mut sigmas = BTreeMap::new();
    for (j, o) in order_fits.iter().enumerate() {
        let pn = o.bec_area / total;
        // Normalisation: dP_n/dA_k = (delta_nk - P_n) / total.
        let mut var = 0.0;
        for (k, ok) in order_fits.iter().enumerate() {
            let gk = ((j == k) as u8 as f64 - pn) / total;
            for l in 0..m {
                let gl = ((j == l) as u8 as f64 - pn) / total;
                let cov = if k == l {
                    ok.bec_area_sigma.powi(2)
                } else {
                    let c = fit.covariance[5 + k][5 + l];
                    if fit.sigmas[5 + k].is_finite() && fit.sigmas[5 + l].is_finite() {
                        c
                    } else {
                        0.0
                    }
                };
                var += gk * gl * cov;
            }
        }
        pops.insert(o.order, pn);
        sigmas.insert(o.order, var.max(0.0).sqrt());
    }
    Ok(BandExtraction {
        m_f: band.m_f,
        populations: MomentumPopulations::new(pops).with_sigmas(sigmas),
        fit: PeakFitResult {
            m_f: band.m_f,
            orders: order_fits,
            spacing_px: p[1],
            baseline: p[4],
            covariance: fit.covariance.clone(),
            chi2: fit.chi2,
            dof: fit.dof,
            residual_rms,
            thermal_split_identified,
            excluded_pixels: excluded,
            iterations: fit.iterations,
        },
    })
}

/// Populations of every band from the BEC areas.
pub fn extract_populations(od: &OdImage, layout: &PeakLayout, options: &FitOptions) -> Result<Vec<BandExtraction>, ImagingError> {
    if layout.bands.is_empty() {
        return Err(ImagingError::EmptyInput("peak layout has no bands".into()));
    }
    layout.bands.iter().map(|b| fit_band(od, b, layout, options)).collect()
}
