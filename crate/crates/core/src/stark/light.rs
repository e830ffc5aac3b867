use serde::{Deserialize, Serialize};

use super::StarkError;

/// A monochromatic running wave and its orientation relative to the quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightField {
    /// Vacuum wavelength, nm.
    pub wavelength_nm: f64,
    /// Intensity, W/m^2.
    pub intensity_w_m2: f64,
    /// Ellipticity angle; `A = sin(2 theta0)`.
    pub theta0: f64,
    /// Angle between wave vector and quantization axis.
    pub theta_k: f64,
    /// Angle between polarization vector and quantization axis.
    pub theta_p: f64,
}

impl LightField {
    pub fn new(wavelength_nm: f64, intensity_w_m2: f64, theta0: f64, theta_k: f64, theta_p: f64) -> Result<Self, StarkError> {
        let light = Self {
            wavelength_nm,
            intensity_w_m2,
            theta0,
            theta_k,
            theta_p,
        };
        light.validate()?;
        Ok(light)
    }

    /// Linear polarization perpendicular to a quantization axis along the wave vector.
    pub fn linear(wavelength_nm: f64, intensity_w_m2: f64) -> Self {
        Self {
            wavelength_nm,
            intensity_w_m2,
            theta0: 0.0,
            theta_k: 0.0,
            theta_p: std::f64::consts::FRAC_PI_2,
        }
    }

    /// Elliptical polarization with degree of circularity `a`, wave vector along the axis.
    pub fn with_circularity(wavelength_nm: f64, intensity_w_m2: f64, a: f64) -> Self {
        Self {
            theta0: 0.5 * a.clamp(-1.0, 1.0).asin(),
            ..Self::linear(wavelength_nm, intensity_w_m2)
        }
    }

    pub fn at_wavelength(&self, wavelength_nm: f64) -> Self {
        Self { wavelength_nm, ..*self }
    }

    pub fn validate(&self) -> Result<(), StarkError> {
        if !(self.wavelength_nm.is_finite() && self.wavelength_nm > 0.0) {
            return Err(StarkError::InvalidLight(format!("wavelength {} nm", self.wavelength_nm)));
        }
        if !(self.intensity_w_m2.is_finite() && self.intensity_w_m2 >= 0.0) {
            return Err(StarkError::InvalidLight(format!("intensity {} W/m^2", self.intensity_w_m2)));
        }
        if ![self.theta0, self.theta_k, self.theta_p].iter().all(|x| x.is_finite()) {
            return Err(StarkError::InvalidLight("non-finite angle".into()));
        }
        Ok(())
    }
}

/// Polarization factors of the shift formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationParams {
    /// Degree of circular polarization, `sin(2 theta0)`.
    pub a: f64,
    /// `A cos(theta_k)`.
    pub c: f64,
    /// `(3 cos^2(theta_p) - 1) / 2`.
    pub d: f64,
}

pub fn polarization_params(light: &LightField) -> PolarizationParams {
    let a = (2.0 * light.theta0).sin();
    let cp = light.theta_p.cos();
    PolarizationParams {
        a,
        c: a * light.theta_k.cos(),
        d: 0.5 * (3.0 * cp * cp - 1.0),
    }
}
