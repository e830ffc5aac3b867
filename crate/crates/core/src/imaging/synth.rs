//! Synthetic absorption shots: Stern-Gerlach separated `m_F` rows, diffraction
//! orders along x, drifting sinusoidal fringes and photon shot noise.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Frame, FrameMeta, FrameRole, ImagingError};
use crate::kd::MomentumPopulations;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandGeometry {
    pub m_f: i32,
    pub center_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotGeometry {
    pub width: usize,
    pub height: usize,
    pub center_x: f64,
    /// Distance between neighbouring orders, px.
    pub spacing_px: f64,
    pub bec_sigma_px: f64,
    pub thermal_sigma_px: f64,
    /// Fraction of every order's area in the thermal component.
    pub thermal_fraction: f64,
    pub band_sigma_y_px: f64,
    /// Integrated optical density of a fully populated band, OD px^2.
    pub band_area: f64,
    pub bands: Vec<BandGeometry>,
}

impl Default for ShotGeometry {
    fn default() -> Self {
        Self {
            width: 320,
            height: 340,
            center_x: 160.0,
            spacing_px: 36.0,
            bec_sigma_px: 4.0,
            thermal_sigma_px: 14.0,
            thermal_fraction: 0.1,
            band_sigma_y_px: 3.5,
            band_area: 300.0,
            bands: vec![
                BandGeometry { m_f: -1, center_y: 25.0 },
                BandGeometry { m_f: 0, center_y: 55.0 },
                BandGeometry { m_f: 1, center_y: 85.0 },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeComponent {
    /// Relative intensity modulation.
    pub amplitude: f64,
    pub period_px: f64,
    pub angle_rad: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeSpec {
    pub components: Vec<FringeComponent>,
    /// Standard deviation of the per-frame phase drift of every component, rad.
    pub drift_sigma_rad: f64,
    /// Relative standard deviation of the overall illumination between frames.
    pub intensity_jitter: f64,
}

impl FringeSpec {
    pub fn none() -> Self {
        Self {
            components: Vec::new(),
            drift_sigma_rad: 0.0,
            intensity_jitter: 0.0,
        }
    }
}

impl Default for FringeSpec {
    fn default() -> Self {
        Self {
            components: vec![
                FringeComponent {
                    amplitude: 0.12,
                    period_px: 23.0,
                    angle_rad: 0.35,
                    phase: 0.0,
                },
                FringeComponent {
                    amplitude: 0.06,
                    period_px: 41.0,
                    angle_rad: 1.9,
                    phase: 1.0,
                },
            ],
            drift_sigma_rad: 0.8,
            intensity_jitter: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Mean photoelectrons per pixel of the probe.
    pub photons: f64,
    pub shot_noise: bool,
    /// Gaussian read noise, photoelectrons rms.
    pub read_noise: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            photons: 4000.0,
            shot_noise: true,
            read_noise: 0.0,
        }
    }
}

impl NoiseSpec {
    pub fn noiseless(photons: f64) -> Self {
        Self {
            photons,
            shot_noise: false,
            read_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTruth {
    pub shot_id: String,
    pub populations: BTreeMap<i32, MomentumPopulations>,
    pub signal_phases: Vec<f64>,
    pub reference_phases: Vec<f64>,
    pub signal_intensity: f64,
    pub reference_intensity: f64,
}

#[derive(Debug, Clone)]
pub struct Shot {
    pub signal: Frame,
    pub reference: Frame,
    pub truth: ShotTruth,
}

fn gaussian(x: f64, centre: f64, sigma: f64) -> f64 {
    let u = (x - centre) / sigma;
    (-0.5 * u * u).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

impl ShotGeometry {
    pub fn order_center(&self, order: i32) -> f64 {
        self.center_x + order as f64 * self.spacing_px
    }

    /// Largest order whose thermal cloud stays inside the frame.
    pub fn max_visible_order(&self) -> i32 {
        let reach = 3.0 * self.thermal_sigma_px.max(self.bec_sigma_px);
        let mut n = 0;
        while self.order_center(-(n + 1)) - reach >= 0.0 && self.order_center(n + 1) + reach <= self.width as f64 {
            n += 1;
        }
        n
    }

    pub fn validate(&self) -> Result<(), ImagingError> {
        let positive = [self.spacing_px, self.bec_sigma_px, self.thermal_sigma_px, self.band_sigma_y_px];
        if self.width == 0 || self.height == 0 || positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ImagingError::Geometry("sizes and widths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.thermal_fraction) || !(self.band_area >= 0.0) {
            return Err(ImagingError::Geometry("thermal fraction or band area out of range".into()));
        }
        let reach = 3.0 * self.thermal_sigma_px.max(self.bec_sigma_px);
        if self.center_x - reach < 0.0 || self.center_x + reach > self.width as f64 {
            return Err(ImagingError::Geometry(format!("zero order at x = {} leaves the frame", self.center_x)));
        }
        for b in &self.bands {
            let r = 4.0 * self.band_sigma_y_px;
            if b.center_y - r < 0.0 || b.center_y + r > self.height as f64 {
                return Err(ImagingError::Geometry(format!("m_F = {} band at y = {} leaves the frame", b.m_f, b.center_y)));
            }
        }
        Ok(())
    }

    /// Row span of a band, `center +- 4 sigma_y`.
    pub fn band_rows(&self, band: &BandGeometry) -> (usize, usize) {
        let r = 4.0 * self.band_sigma_y_px;
        ((band.center_y - r).floor().max(0.0) as usize, ((band.center_y + r).ceil() as usize).min(self.height))
    }

    /// Optical density of the clouds without noise or fringes.
    pub fn ideal_od(&self, populations: &BTreeMap<i32, MomentumPopulations>) -> Result<Vec<f64>, ImagingError> {
        self.validate()?;
        let mut od = vec![0.0; self.width * self.height];
        let visible = self.max_visible_order();
        for band in &self.bands {
            let Some(pops) = populations.get(&band.m_f) else { continue };
            if let Some((&n, _)) = pops.populations.iter().find(|(n, p)| n.abs() > visible && **p > 1e-6) {
                return Err(ImagingError::Geometry(format!("order {n} of m_F = {} falls outside the frame", band.m_f)));
            }
            let rows: Vec<f64> = (0..self.height).map(|y| gaussian(y as f64, band.center_y, self.band_sigma_y_px)).collect();
            let mut profile = vec![0.0; self.width];
            for (&n, &p) in &pops.populations {
                if p == 0.0 {
                    continue;
                }
                let c = self.order_center(n);
                for (x, v) in profile.iter_mut().enumerate() {
                    let x = x as f64;
                    *v += p
                        * self.band_area
                        * ((1.0 - self.thermal_fraction) * gaussian(x, c, self.bec_sigma_px)
                            + self.thermal_fraction * gaussian(x, c, self.thermal_sigma_px));
                }
            }
            for (y, ry) in rows.iter().enumerate() {
                if *ry < 1e-12 {
                    continue;
                }
                for (x, px) in profile.iter().enumerate() {
                    od[y * self.width + x] += ry * px;
                }
            }
        }
        Ok(od)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ShotSpec {
    pub geometry: ShotGeometry,
    pub fringes: FringeSpec,
    pub noise: NoiseSpec,
}

fn draw_phases<R: Rng + ?Sized>(fringes: &FringeSpec, rng: &mut R) -> Vec<f64> {
    let drift = Normal::new(0.0, fringes.drift_sigma_rad.max(0.0)).expect("finite drift");
    fringes.components.iter().map(|c| c.phase + drift.sample(rng)).collect()
}

fn draw_intensity<R: Rng + ?Sized>(spec: &ShotSpec, rng: &mut R) -> f64 {
    let jitter = Normal::new(0.0, spec.fringes.intensity_jitter.max(0.0)).expect("finite jitter");
    spec.noise.photons * (1.0 + jitter.sample(rng)).max(0.0)
}

/// Probe intensity with the given fringe phases.
pub fn illumination(spec: &ShotSpec, intensity: f64, phases: &[f64]) -> Vec<f64> {
    let g = &spec.geometry;
    let mut out = vec![intensity; g.width * g.height];
    for (c, &phi) in spec.fringes.components.iter().zip(phases) {
        let (kx, ky) = (
            2.0 * std::f64::consts::PI * c.angle_rad.cos() / c.period_px,
            2.0 * std::f64::consts::PI * c.angle_rad.sin() / c.period_px,
        );
        for y in 0..g.height {
            for x in 0..g.width {
                out[y * g.width + x] += intensity * c.amplitude * (kx * x as f64 + ky * y as f64 + phi).sin();
            }
        }
    }
    out
}

fn detect<R: Rng + ?Sized>(noise: &NoiseSpec, mean: &[f64], rng: &mut R) -> Vec<f64> {
    let read = Normal::new(0.0, noise.read_noise.max(0.0)).expect("finite read noise");
    mean.iter()
        .map(|&m| {
            let m = m.max(0.0);
            let counts = if noise.shot_noise && m > 0.0 {
                Poisson::new(m).map(|p| p.sample(rng)).unwrap_or(m)
            } else {
                m
            };
            let v = if noise.read_noise > 0.0 { counts + read.sample(rng) } else { counts };
            v.max(0.0)
        })
        .collect()
}

/// Atom-free probe frame with freshly drifted fringes.
pub fn synthesize_reference<R: Rng + ?Sized>(spec: &ShotSpec, shot_id: &str, rng: &mut R) -> Result<Frame, ImagingError> {
    let g = &spec.geometry;
    let phases = draw_phases(&spec.fringes, rng);
    let intensity = draw_intensity(spec, rng);
    let data = detect(&spec.noise, &illumination(spec, intensity, &phases), rng);
    Frame::new(g.width, g.height, data, FrameMeta::new(shot_id, FrameRole::Reference))
}

/// Signal and paired reference frame for the given populations, keyed by `m_F`.
pub fn synthesize_shot<R: Rng + ?Sized>(
    spec: &ShotSpec,
    populations: &BTreeMap<i32, MomentumPopulations>,
    shot_id: &str,
    rng: &mut R,
) -> Result<Shot, ImagingError> {
    let g = &spec.geometry;
    let od = g.ideal_od(populations)?;
    let (sp, si) = (draw_phases(&spec.fringes, rng), draw_intensity(spec, rng));
    let (rp, ri) = (draw_phases(&spec.fringes, rng), draw_intensity(spec, rng));
    let mean_s: Vec<f64> = illumination(spec, si, &sp).iter().zip(&od).map(|(i, d)| i * (-d).exp()).collect();
    let signal = detect(&spec.noise, &mean_s, rng);
    let reference = detect(&spec.noise, &illumination(spec, ri, &rp), rng);
    Ok(Shot {
        signal: Frame::new(g.width, g.height, signal, FrameMeta::new(shot_id, FrameRole::Signal))?,
        reference: Frame::new(g.width, g.height, reference, FrameMeta::new(shot_id, FrameRole::Reference))?,
        truth: ShotTruth {
            shot_id: shot_id.to_string(),
            populations: populations.clone(),
            signal_phases: sp,
            reference_phases: rp,
            signal_intensity: si,
            reference_intensity: ri,
        },
    })
}
