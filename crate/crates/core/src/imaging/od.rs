//! Optical density `-ln(S/R)` with a hard ceiling for saturated or empty pixels.

use serde::{Deserialize, Serialize};

use super::{Frame, ImagingError, Rect};

pub const DEFAULT_OD_CAP: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Raw,
    Composed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdProvenance {
    pub reference: ReferenceKind,
    pub od_cap: f64,
    /// Pixels set to the cap because `S <= 0`, `R <= 0` or `-ln(S/R)` exceeded it.
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
    pub provenance: OdProvenance,
}

impl OdImage {
    pub fn from_values(width: usize, height: usize, data: Vec<f64>, reference: ReferenceKind) -> Result<Self, ImagingError> {
        if width * height != data.len() || data.is_empty() {
            return Err(ImagingError::Dimensions(format!("{} values for {width}x{height}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ImagingError::Dimensions("non-finite optical density".into()));
        }
        Ok(Self {
            width,
            height,
            valid: vec![true; data.len()],
            data,
            provenance: OdProvenance {
                reference,
                od_cap: f64::INFINITY,
                clamped: 0,
            },
        })
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

    /// False for clamped pixels, which fits skip.
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn region_values(&self, rect: &Rect) -> Vec<f64> {
        rect.rows(self.width)
            .flat_map(|r| r.filter(|&i| self.valid[i]).map(|i| self.data[i]))
            .collect()
    }
}

pub fn optical_density(signal: &Frame, reference: &Frame, kind: ReferenceKind) -> Result<OdImage, ImagingError> {
    optical_density_capped(signal, reference, kind, DEFAULT_OD_CAP)
}

pub fn optical_density_capped(
    signal: &Frame,
    reference: &Frame,
    kind: ReferenceKind,
    cap: f64,
) -> Result<OdImage, ImagingError> {
    if !signal.same_shape(reference) {
        return Err(ImagingError::Dimensions(format!(
            "signal {}x{} vs reference {}x{}",
            signal.width(),
            signal.height(),
            reference.width(),
            reference.height()
        )));
    }
    let mut clamped = 0;
    let mut valid = Vec::with_capacity(signal.data().len());
    let data = signal
        .data()
        .iter()
        .zip(reference.data())
        .map(|(&s, &r)| {
            let od = if s > 0.0 && r > 0.0 { -(s / r).ln() } else { f64::INFINITY };
            if od > cap {
                clamped += 1;
                valid.push(false);
                cap
            } else {
                valid.push(true);
                od
            }
        })
        .collect();
    Ok(OdImage {
        width: signal.width(),
        height: signal.height(),
        data,
        valid,
        provenance: OdProvenance {
            reference: kind,
            od_cap: cap,
            clamped,
        },
    })
}
