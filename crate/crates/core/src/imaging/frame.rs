//! Camera frames, rectangular regions and their on-disk form (16-bit PGM plus a TOML sidecar).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ImagingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameRole {
    Signal,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameMeta {
    pub shot_id: String,
    pub role: FrameRole,
    /// Control value of the shot (lattice wavelength in nm for tune-out scans).
    #[serde(default)]
    pub control: Option<f64>,
    #[serde(default)]
    pub exposure_us: Option<f64>,
}

impl FrameMeta {
    pub fn new(shot_id: impl Into<String>, role: FrameRole) -> Self {
        Self {
            shot_id: shot_id.into(),
            role,
            control: None,
            exposure_us: None,
        }
    }
}

/// Pixel rectangle `[x, x + width) x [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.area() > 0 && self.x + self.width <= width && self.y + self.height <= height
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    /// Row-major index ranges of the rectangle in an image `stride` pixels wide.
    pub fn rows(&self, stride: usize) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (self.y..self.y + self.height).map(move |r| r * stride + self.x..r * stride + self.x + self.width)
    }
}

/// Photoelectron counts, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
    pub meta: FrameMeta,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>, meta: FrameMeta) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImagingError::Dimensions(format!(
                "{} samples for a {width}x{height} frame",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(ImagingError::InvalidPixel {
                x: i % width,
                y: i / width,
                value: data[i],
            });
        }
        Ok(Self { width, height, data, meta })
    }

    pub fn filled(width: usize, height: usize, value: f64, meta: FrameMeta) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width * height], meta)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Writes `<path>` as 16-bit PGM (counts rounded, saturating at 65535) and `<path>.toml`.
    pub fn save(&self, path: &Path) -> Result<(), ImagingError> {
        let pixels: Vec<u16> = self.data.iter().map(|v| v.round().min(u16::MAX as f64) as u16).collect();
        let buffer = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(self.width as u32, self.height as u32, pixels)
            .expect("buffer size matches");
        buffer
            .save_with_format(path, image::ImageFormat::Pnm)
            .map_err(|e| ImagingError::Io(format!("{}: {e}", path.display())))?;
        let sidecar = toml::to_string(&self.meta).map_err(|e| ImagingError::Io(e.to_string()))?;
        std::fs::write(sidecar_path(path), sidecar).map_err(|e| ImagingError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ImagingError> {
        let img = image::open(path).map_err(|e| ImagingError::Io(format!("{}: {e}", path.display())))?;
        let gray = img.into_luma16();
        let (w, h) = gray.dimensions();
        let data = gray.into_raw().into_iter().map(f64::from).collect();
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| ImagingError::Io(format!("{}: {e}", side.display())))?;
        let meta: FrameMeta = toml::from_str(&text).map_err(|e| ImagingError::Io(format!("{}: {e}", side.display())))?;
        Self::new(w as usize, h as usize, data, meta)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}
