//! Projection of the lattice wave vector on the total magnetic field, and the
//! background-field fit from offset-field scans of the vector shift.

use serde::{Deserialize, Serialize};

use super::lm::{wls_fit, FitOptions, FitResult, Param};
use super::{ModelFitError, ScanPoint};
use crate::tuneout::Estimate;

/// Applied offset and background field, G. The wave vector is along z.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MagneticEnvironment {
    pub applied: [f64; 3],
    pub background: [f64; 3],
}

impl MagneticEnvironment {
    pub fn new(applied: [f64; 3], background: [f64; 3]) -> Self {
        Self { applied, background }
    }

    pub fn total(&self) -> [f64; 3] {
        [
            self.background[0] + self.applied[0],
            self.background[1] + self.applied[1],
            self.background[2] + self.applied[2],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("total magnetic field is zero; the quantization axis is undefined")]
pub struct ZeroFieldError;

/// `B_z,t / |B_t|`.
pub fn cos_theta_k(env: &MagneticEnvironment) -> Result<f64, ZeroFieldError> {
    let [x, y, z] = env.total();
    let norm = (x * x + y * y + z * z).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(ZeroFieldError);
    }
    Ok((z / norm).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// `|V0|` of `m_F = +1` at the `m_F = 0` zero versus the offset field along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScan {
    pub axis: Axis,
    pub points: Vec<ScanPoint>,
}

/// `a |cos theta_k|` for an offset `b` along `axis`.
pub fn projected_potential(amplitude: f64, background: [f64; 3], axis: Axis, b: f64) -> f64 {
    let mut applied = [0.0; 3];
    applied[axis.index()] = b;
    match cos_theta_k(&MagneticEnvironment::new(applied, background)) {
        Ok(c) => amplitude * c.abs(),
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFitSummary {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl From<&FitResult> for ScanFitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            names: f.names.clone(),
            params: f.params.clone(),
            sigmas: f.sigmas.clone(),
            chi2: f.chi2,
            dof: f.dof,
            iterations: f.iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationChi2 {
    pub chi2_positive: f64,
    pub chi2_negative: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFitMode {
    Sequential,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundFieldFit {
    pub mode: FieldFitMode,
    pub b0: [Estimate; 3],
    pub amplitude_er: Estimate,
    /// `sqrt(B0x^2 + B0y^2)` from the z scan alone.
    pub b_perp_from_z: Estimate,
    /// False when no y scan fixed the sign of `B0y`; it is then reported positive.
    pub b0y_sign_resolved: bool,
    pub z_fit: Option<ScanFitSummary>,
    pub x_fit: Option<ScanFitSummary>,
    pub y_validation: Option<ValidationChi2>,
    pub global_fit: Option<ScanFitSummary>,
}

fn scan(scans: &[FieldScan], axis: Axis) -> Option<&FieldScan> {
    scans.iter().find(|s| s.axis == axis)
}

fn arrays(points: &[ScanPoint]) -> (Vec<f64>, Vec<f64>) {
    (
        points.iter().map(|p| p.value_er).collect(),
        points.iter().map(|p| p.sigma_er).collect(),
    )
}

fn chi2_of(points: &[ScanPoint], f: impl Fn(f64) -> f64) -> f64 {
    points
        .iter()
        .map(|p| ((p.value_er - f(p.control)) / p.sigma_er).powi(2))
        .sum()
}

fn check_flat(scan: &FieldScan) -> Result<(), ModelFitError> {
    let max = scan.points.iter().map(|p| p.value_er).fold(f64::NEG_INFINITY, f64::max);
    let min = scan.points.iter().map(|p| p.value_er).fold(f64::INFINITY, f64::min);
    let noise = scan.points.iter().map(|p| p.sigma_er).fold(0.0, f64::max);
    if scan.points.len() < 4 || max - min <= 2.0 * noise {
        return Err(ModelFitError::Unidentifiable(format!(
            "{:?} scan is flat within noise ({} points, spread {:.3e}, sigma {:.3e})",
            scan.axis,
            scan.points.len(),
            max - min,
            noise
        )));
    }
    Ok(())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
}

/// z scan: `a |u| / sqrt(u^2 + b_perp^2)` with `u = B_z + B0z`.
fn fit_z(points: &[ScanPoint], amplitude: f64, options: &FitOptions) -> Result<FitResult, ModelFitError> {
    let (y, s) = arrays(points);
    let model = |p: &[f64], out: &mut [f64]| {
        for (o, pt) in out.iter_mut().zip(points) {
            *o = projected_potential(p[0], [p[2], 0.0, p[1]], Axis::Z, pt.control);
        }
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for b0z in points.iter().map(|p| -p.control) {
        for perp in log_grid(1e-3, 10.0, 60) {
            let c = chi2_of(points, |b| projected_potential(amplitude, [perp, 0.0, b0z], Axis::Z, b));
            if c < best.0 {
                best = (c, b0z, perp);
            }
        }
    }
    let params = [
        Param::new("amplitude", amplitude).bounded(0.0, f64::INFINITY),
        Param::new("b0z", best.1).with_scale(0.1),
        Param::new("b_perp", best.2).bounded(0.0, f64::INFINITY).with_scale(0.1),
    ];
    Ok(wls_fit(&model, &y, &s, &params, options)?)
}

/// x scan with `B0z` held: `a |B0z| / sqrt((B_x + B0x)^2 + B0y^2 + B0z^2)`.
fn fit_x(points: &[ScanPoint], amplitude: f64, b0z: f64, options: &FitOptions) -> Result<FitResult, ModelFitError> {
    let (y, s) = arrays(points);
    let model = |p: &[f64], out: &mut [f64]| {
        for (o, pt) in out.iter_mut().zip(points) {
            *o = projected_potential(p[0], [p[1], p[2], b0z], Axis::X, pt.control);
        }
    };
    let peak = points
        .iter()
        .max_by(|a, b| a.value_er.total_cmp(&b.value_er))
        .expect("non-empty scan");
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for b0x in points.iter().map(|p| -p.control) {
        for b0y in log_grid(1e-3, 10.0, 60) {
            let c = chi2_of(points, |b| projected_potential(amplitude, [b0x, b0y, b0z], Axis::X, b));
            if c < best.0 {
                best = (c, b0x, b0y);
            }
        }
    }
    if best.0 == f64::INFINITY {
        best.1 = -peak.control;
    }
    let params = [
        Param::new("amplitude", amplitude).bounded(0.0, f64::INFINITY),
        Param::new("b0x", best.1).with_scale(0.1),
        Param::new("b0y_abs", best.2).bounded(0.0, f64::INFINITY).with_scale(0.1),
    ];
    Ok(wls_fit(&model, &y, &s, &params, options)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FieldFitOptions {
    /// Starting amplitude `a` (E_r); taken from the largest z-scan value when absent.
    pub initial_amplitude: Option<f64>,
    pub fit: FitOptions,
}

/// Sequential background-field fit: `B0z` and `|B0_perp|` from the z scan, then
/// `B0x` and `|B0y|` from the x scan with `B0z` held. A y scan only picks the sign of `B0y`.
pub fn fit_background_field(scans: &[FieldScan], options: &FieldFitOptions) -> Result<BackgroundFieldFit, ModelFitError> {
    let z = scan(scans, Axis::Z).ok_or(ModelFitError::MissingScan(Axis::Z))?;
    let x = scan(scans, Axis::X).ok_or(ModelFitError::MissingScan(Axis::X))?;
    check_flat(z)?;
    check_flat(x)?;
    let a_init = options
        .initial_amplitude
        .unwrap_or_else(|| z.points.iter().map(|p| p.value_er).fold(0.0, f64::max));
    let zf = fit_z(&z.points, a_init, &options.fit)?;
    let b0z = zf.params[1];
    let b0z_sigma = zf.sigmas[1];
    let xf = fit_x(&x.points, zf.params[0], b0z, &options.fit)?;

    // Carry the B0z uncertainty into the x-scan parameters.
    let h = if b0z_sigma.is_finite() && b0z_sigma > 0.0 {
        b0z_sigma
    } else {
        1e-4
    };
    let up = fit_x(&x.points, xf.params[0], b0z + h, &options.fit)?;
    let down = fit_x(&x.points, xf.params[0], b0z - h, &options.fit)?;
    let propagated = |j: usize| {
        let d = (up.params[j] - down.params[j]) / (2.0 * h) * b0z_sigma;
        (xf.sigmas[j].powi(2) + d * d).sqrt()
    };
    let (b0x, b0y_abs, amplitude) = (xf.params[1], xf.params[2], xf.params[0]);

    let (b0y, resolved, validation) = match scan(scans, Axis::Y) {
        Some(y) => {
            let pos = chi2_of(&y.points, |b| projected_potential(amplitude, [b0x, b0y_abs, b0z], Axis::Y, b));
            let neg = chi2_of(&y.points, |b| projected_potential(amplitude, [b0x, -b0y_abs, b0z], Axis::Y, b));
            let sign = if neg < pos { -1.0 } else { 1.0 };
            (
                sign * b0y_abs,
                pos != neg,
                Some(ValidationChi2 {
                    chi2_positive: pos,
                    chi2_negative: neg,
                    points: y.points.len(),
                }),
            )
        }
        None => (b0y_abs, false, None),
    };

    Ok(BackgroundFieldFit {
        mode: FieldFitMode::Sequential,
        b0: [
            Estimate::new(b0x, propagated(1)),
            Estimate::new(b0y, propagated(2)),
            Estimate::new(b0z, b0z_sigma),
        ],
        amplitude_er: Estimate::new(amplitude, propagated(0)),
        b_perp_from_z: Estimate::new(zf.params[2], zf.sigmas[2]),
        b0y_sign_resolved: resolved,
        z_fit: Some((&zf).into()),
        x_fit: Some((&xf).into()),
        y_validation: validation,
        global_fit: None,
    })
}

/// One fit of `(a, B0x, B0y, B0z)` to every scan, started from the sequential result.
pub fn fit_background_field_global(
    scans: &[FieldScan],
    options: &FieldFitOptions,
) -> Result<BackgroundFieldFit, ModelFitError> {
    let seq = fit_background_field(scans, options)?;
    let points: Vec<(Axis, &ScanPoint)> = scans
        .iter()
        .flat_map(|s| s.points.iter().map(move |p| (s.axis, p)))
        .collect();
    let y: Vec<f64> = points.iter().map(|(_, p)| p.value_er).collect();
    let s: Vec<f64> = points.iter().map(|(_, p)| p.sigma_er).collect();
    let model = |p: &[f64], out: &mut [f64]| {
        for (o, (axis, pt)) in out.iter_mut().zip(&points) {
            *o = projected_potential(p[0], [p[1], p[2], p[3]], *axis, pt.control);
        }
    };
    let mut best: Option<FitResult> = None;
    for sign in [1.0, -1.0] {
        let params = [
            Param::new("amplitude", seq.amplitude_er.value).bounded(0.0, f64::INFINITY),
            Param::new("b0x", seq.b0[0].value).with_scale(0.1),
            Param::new("b0y", sign * seq.b0[1].value.abs()).with_scale(0.1),
            Param::new("b0z", seq.b0[2].value).with_scale(0.1),
        ];
        if let Ok(f) = wls_fit(&model, &y, &s, &params, &options.fit) {
            if best.as_ref().map_or(true, |b| f.chi2 < b.chi2) {
                best = Some(f);
            }
        }
    }
    let f = best.ok_or_else(|| ModelFitError::Unidentifiable("global field fit failed for both signs of B0y".into()))?;
    let est = |j: usize| Estimate::new(f.params[j], f.sigmas[j]);
    Ok(BackgroundFieldFit {
        mode: FieldFitMode::Global,
        b0: [est(1), est(2), est(3)],
        amplitude_er: est(0),
        b0y_sign_resolved: scan(scans, Axis::Y).is_some(),
        global_fit: Some((&f).into()),
        ..seq
    })
}
