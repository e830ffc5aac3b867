//! Absorption-image analysis: synthetic shots, optimal reference composition,
//! optical density, band binning with multi-Gaussian peak fits, and SNR.

mod basis;
mod frame;
mod od;
mod peaks;
mod snr;
mod synth;


pub use basis::{Composition, RankReport, ReferenceBasis, MAX_BASIS_FRAMES, RANK_TOLERANCE};
pub use frame::{sidecar_path, Frame, FrameMeta, FrameRole, Rect};
pub use od::{optical_density, optical_density_capped, OdImage, OdProvenance, ReferenceKind, DEFAULT_OD_CAP};
pub use peaks::{
    bin_band, extract_populations, BandExtraction, BandLayout, OrderFit, PeakFitResult, PeakLayout,
    PEAK_FIT_FTOL, PEAK_FIT_MIN_ITERATIONS,
};
pub use snr::snr;
pub use synth::{
    illumination, synthesize_reference, synthesize_shot, BandGeometry, FringeComponent, FringeSpec, NoiseSpec, Shot,
    ShotGeometry, ShotSpec, ShotTruth,
};

use crate::fit::FitError;

/// Default signal-free mask of the default geometry.
pub const DEFAULT_MASK: Rect = Rect::new(10, 136, 300, 200);
/// Atom-free strip outside the mask, used as the SNR background.
pub const DEFAULT_BACKGROUND: Rect = Rect::new(10, 104, 300, 28);

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("pixel ({x}, {y}) holds {value}; counts must be finite and nonnegative")]
    InvalidPixel { x: usize, y: usize, value: f64 },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("geometry overflow: {0}")]
    Geometry(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("peak fit of m_F = {m_f} failed: {source}")]
    PeakFit { m_f: i32, source: FitError },
    #[error("not identifiable: {0}")]
    Unidentifiable(String),
}
