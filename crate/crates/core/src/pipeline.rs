//! Synthetic tune-out scan chain: lattice depth per shot, Kapitza-Dirac
//! populations, absorption frames, image analysis, depth inversion and the
//! V-shaped fit of `|V0|` against wavelength.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use serde::{Deserialize, Serialize};

use crate::atomic::{HyperfineState, SpeciesData, Spin};
use crate::fit::{fit_tuneout_scan, FitOptions, ModelFitError, ScanPoint, TuneoutScanFit};
use crate::imaging::{
    extract_populations, optical_density, snr, synthesize_reference, synthesize_shot, BandExtraction, Frame,
    ImagingError, PeakLayout, Rect, ReferenceBasis, ReferenceKind, ShotSpec,
};
use crate::kd::{diffraction_populations, invert_depth, DepthEstimate, InversionOptions, KdError};
use crate::stark::{recoil_energy, LightField, Toggles};
use crate::tuneout::{TuneoutError, TuneoutSolver, DEFAULT_BRACKET_NM};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid scan configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Tuneout(#[from] TuneoutError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Kd(#[from] KdError),
    #[error(transparent)]
    Fit(#[from] ModelFitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Hyperfine level of the sample.
    pub f: i32,
    /// Single-beam lattice intensity, W/m^2.
    pub intensity_w_m2: f64,
    /// Degree of circular polarization of the lattice beam.
    pub circularity: f64,
    pub center_nm: f64,
    pub half_span_pm: f64,
    pub wavelengths: usize,
    pub shots_per_wavelength: usize,
    pub pulse_us: f64,
    /// Atom-free frames recorded for the reference basis.
    pub reference_frames: usize,
    pub max_order: i32,
    pub shot: ShotSpec,
    pub mask: Rect,
    pub snr_signal: Option<Rect>,
    pub snr_background: Option<Rect>,
    pub inversion: InversionOptions,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let mut shot = ShotSpec::default();
        shot.geometry.height = 100;
        shot.geometry.bands = vec![crate::imaging::BandGeometry { m_f: 0, center_y: 18.0 }];
        Self {
            f: 1,
            intensity_w_m2: 8.0e6,
            circularity: 0.0,
            center_nm: 790.0185,
            half_span_pm: 60.0,
            wavelengths: 20,
            shots_per_wavelength: 5,
            pulse_us: 8.75,
            reference_frames: 30,
            max_order: 3,
            shot,
            mask: Rect::new(10, 40, 300, 56),
            snr_signal: None,
            snr_background: None,
            inversion: InversionOptions::default(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        if self.wavelengths < 3 || self.shots_per_wavelength == 0 {
            return bad("need at least 3 wavelengths and one shot per wavelength");
        }
        if !(self.half_span_pm > 0.0 && self.pulse_us > 0.0 && self.intensity_w_m2 >= 0.0) {
            return bad("span, pulse length and intensity must be positive");
        }
        if self.reference_frames == 0 {
            return bad("reference basis needs at least one frame");
        }
        if !(-1.0..=1.0).contains(&self.circularity) {
            return bad("circularity must lie in [-1, 1]");
        }
        self.shot.geometry.validate()?;
        if !self.mask.fits(self.shot.geometry.width, self.shot.geometry.height) {
            return bad("mask outside the frame");
        }
        Ok(())
    }

    pub fn wavelength_grid(&self) -> Vec<f64> {
        let n = self.wavelengths;
        (0..n)
            .map(|k| self.center_nm + self.half_span_pm * 1e-3 * (2.0 * k as f64 / (n - 1) as f64 - 1.0))
            .collect()
    }

    fn beam(&self) -> LightField {
        LightField::with_circularity(self.center_nm, self.intensity_w_m2, self.circularity)
    }

    pub fn layout(&self) -> PeakLayout {
        PeakLayout::from_geometry(&self.shot.geometry, self.max_order)
    }
}

/// Model depths of every imaged `m_F` band at one wavelength.
#[derive(Debug, Clone)]
pub struct DepthModel {
    solvers: BTreeMap<i32, TuneoutSolver>,
    mass_kg: f64,
}

impl DepthModel {
    pub fn new(config: &ScanConfig, data: &SpeciesData) -> Result<Self, PipelineError> {
        let mut solvers = BTreeMap::new();
        for band in &config.shot.geometry.bands {
            let state = HyperfineState::rb87_ground(config.f, band.m_f)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            solvers.insert(band.m_f, TuneoutSolver::new(&state, &config.beam(), data)?);
        }
        Ok(Self {
            solvers,
            mass_kg: data.species.mass_kg.value,
        })
    }

    pub fn depth_er(&self, m_f: i32, wavelength_nm: f64) -> Result<f64, PipelineError> {
        let solver = self
            .solvers
            .get(&m_f)
            .ok_or_else(|| PipelineError::Config(format!("no m_F = {m_f} band")))?;
        Ok(solver.depth(wavelength_nm, Toggles::ALL)?)
    }

    /// Zero of the `m_F` band depth near the scan.
    pub fn tuneout_nm(&self, m_f: i32) -> Result<f64, PipelineError> {
        let solver = self
            .solvers
            .get(&m_f)
            .ok_or_else(|| PipelineError::Config(format!("no m_F = {m_f} band")))?;
        Ok(solver.find(DEFAULT_BRACKET_NM, Toggles::ALL)?.wavelength_nm)
    }

    pub fn recoil_hz(&self, wavelength_nm: f64) -> f64 {
        recoil_energy(wavelength_nm, self.mass_kg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_id: String,
    pub wavelength_nm: f64,
    /// Injected signed depth per `m_F`, E_r.
    pub depth_er: BTreeMap<i32, f64>,
    pub recoil_hz: f64,
    pub pulse_us: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticShot {
    pub record: ShotRecord,
    pub signal: Frame,
    pub reference: Frame,
}

#[derive(Debug, Clone)]
pub struct SyntheticScan {
    pub shots: Vec<SyntheticShot>,
    pub references: Vec<Frame>,
    /// Injected zero of the `m_F = 0` depth (or of the first band).
    pub tuneout_nm: f64,
    pub seed: u64,
}

/// Frames and ground truth for a seeded scan.
pub fn synthesize_scan(config: &ScanConfig, data: &SpeciesData, seed: u64) -> Result<SyntheticScan, PipelineError> {
    config.validate()?;
    let model = DepthModel::new(config, data)?;
    let reference_band = config.shot.geometry.bands.iter().map(|b| b.m_f).find(|&m| m == 0);
    let target = reference_band.unwrap_or(config.shot.geometry.bands[0].m_f);
    let tuneout_nm = model.tuneout_nm(target)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let references = (0..config.reference_frames)
        .map(|k| synthesize_reference(&config.shot, &format!("ref{k:04}"), &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let mut shots = Vec::new();
    for (i, &l) in config.wavelength_grid().iter().enumerate() {
        let recoil = model.recoil_hz(l);
        let mut depth = BTreeMap::new();
        let mut pops = BTreeMap::new();
        for band in &config.shot.geometry.bands {
            let v = model.depth_er(band.m_f, l)?;
            depth.insert(band.m_f, v);
            pops.insert(band.m_f, diffraction_populations(v.abs(), config.pulse_us, recoil, Some(config.max_order as u32)));
        }
        for s in 0..config.shots_per_wavelength {
            let id = format!("w{i:03}s{s:02}");
            let shot = synthesize_shot(&config.shot, &pops, &id, &mut rng)?;
            let mut signal = shot.signal;
            signal.meta.control = Some(l);
            let mut reference = shot.reference;
            reference.meta.control = Some(l);
            shots.push(SyntheticShot {
                record: ShotRecord {
                    shot_id: id,
                    wavelength_nm: l,
                    depth_er: depth.clone(),
                    recoil_hz: recoil,
                    pulse_us: config.pulse_us,
                },
                signal,
                reference,
            });
        }
    }
    Ok(SyntheticScan {
        shots,
        references,
        tuneout_nm,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandAnalysis {
    pub m_f: i32,
    pub extraction: BandExtraction,
    pub depth: Option<DepthEstimate>,
    pub depth_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotAnalysis {
    pub shot_id: String,
    pub wavelength_nm: f64,
    pub basis_version: Option<u64>,
    pub clamped_pixels: usize,
    pub snr: Option<f64>,
    pub bands: Vec<BandAnalysis>,
}

/// Composed (or raw) reference, optical density, band populations and depth per band.
pub fn analyze_shot(
    signal: &Frame,
    raw_reference: Option<&Frame>,
    basis: Option<&ReferenceBasis>,
    config: &ScanConfig,
    recoil_hz: f64,
) -> Result<ShotAnalysis, PipelineError> {
    let wavelength_nm = signal
        .meta
        .control
        .ok_or_else(|| PipelineError::Config(format!("shot {} has no wavelength", signal.meta.shot_id)))?;
    let (od, version) = match (basis, raw_reference) {
        (Some(b), _) => {
            let c = b.compose(signal)?;
            (optical_density(signal, &c.reference, ReferenceKind::Composed)?, Some(c.basis_version))
        }
        (None, Some(r)) => (optical_density(signal, r, ReferenceKind::Raw)?, None),
        (None, None) => return Err(PipelineError::Config("no reference for shot".into())),
    };
    let snr = match (config.snr_signal, config.snr_background) {
        (Some(s), Some(b)) => Some(snr(&od, &s, &b)?),
        _ => None,
    };
    let bands = extract_populations(&od, &config.layout(), &FitOptions::default())?
        .into_iter()
        .map(|extraction| {
            let (depth, depth_error) = match invert_depth(&extraction.populations, config.pulse_us, recoil_hz, &config.inversion) {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e.to_string())),
            };
            BandAnalysis {
                m_f: extraction.m_f,
                extraction,
                depth,
                depth_error,
            }
        })
        .collect();
    Ok(ShotAnalysis {
        shot_id: signal.meta.shot_id.clone(),
        wavelength_nm,
        basis_version: version,
        clamped_pixels: od.provenance.clamped,
        snr,
        bands,
    })
}

/// `|V0|` points of one band, one per analysed shot with a depth.
pub fn scan_points(analyses: &[ShotAnalysis], m_f: i32) -> Vec<ScanPoint> {
    analyses
        .iter()
        .filter_map(|a| {
            let band = a.bands.iter().find(|b| b.m_f == m_f)?;
            let d = band.depth.as_ref()?;
            (d.sigma_er.is_finite() && d.sigma_er > 0.0).then(|| ScanPoint {
                control: a.wavelength_nm,
                value_er: d.depth_er,
                sigma_er: d.sigma_er,
                m_f: Spin::integer(m_f),
                shots: 1,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecovery {
    pub seed: u64,
    pub injected_nm: f64,
    pub fit: TuneoutScanFit,
    pub points: usize,
    pub rejected_shots: usize,
}

impl ScanRecovery {
    pub fn pull(&self) -> f64 {
        (self.fit.lambda_m_nm.value - self.injected_nm) / self.fit.lambda_m_nm.sigma
    }
}

/// V-fit settings of the scan chain: the covariance is scaled by the reduced chi2.
pub fn scan_fit_options() -> FitOptions {
    FitOptions {
        scale_covariance: true,
        ..FitOptions::default()
    }
}

/// Synthesis, analysis against a composed reference, and the V fit of the `m_F = 0` band.
pub fn run_scan(config: &ScanConfig, data: &SpeciesData, seed: u64) -> Result<ScanRecovery, PipelineError> {
    let scan = synthesize_scan(config, data, seed)?;
    let basis = ReferenceBasis::build(&scan.references, config.mask)?;
    let analyses = scan
        .shots
        .iter()
        .map(|s| analyze_shot(&s.signal, Some(&s.reference), Some(&basis), config, s.record.recoil_hz))
        .collect::<Result<Vec<_>, _>>()?;
    let m_f = config
        .shot
        .geometry
        .bands
        .iter()
        .map(|b| b.m_f)
        .find(|&m| m == 0)
        .unwrap_or(config.shot.geometry.bands[0].m_f);
    let points = scan_points(&analyses, m_f);
    let fit = fit_tuneout_scan(&points, &scan_fit_options())?;
    Ok(ScanRecovery {
        seed,
        injected_nm: scan.tuneout_nm,
        fit,
        points: points.len(),
        rejected_shots: analyses.len() - points.len(),
    })
}

/// Seeds for a batch of independent runs drawn from one master seed.
pub fn run_seeds(master: u64, runs: usize) -> Vec<u64> {
    let mut rng = StdRng::seed_from_u64(master);
    (0..runs).map(|_| rng.random()).collect()
}
