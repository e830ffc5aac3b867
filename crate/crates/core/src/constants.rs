//! Physical constants shared by every module.
//!
//! Values are CODATA 2018. Nothing else in the crate hard-codes a constant.

use std::f64::consts::PI;

/// Pinned physical constants (SI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant, J s (exact).
    pub h: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Speed of light in vacuum, m/s (exact).
    pub c: f64,
    /// Elementary charge, C (exact).
    pub e: f64,
    /// Bohr radius, m.
    pub a0: f64,
    /// Electron mass, kg.
    pub m_e: f64,
    /// Hartree energy, J.
    pub hartree: f64,
    /// Vacuum permittivity, F/m.
    pub epsilon0: f64,
    /// One atomic unit of polarizability (4 pi eps0 a0^3) in C^2 m^2 / J.
    pub au_polarizability: f64,
    /// Atomic mass constant, kg.
    pub amu: f64,
}

/// CODATA 2018 recommended values.
pub const CODATA2018: PhysicalConstants = PhysicalConstants {
    h: 6.626_070_15e-34,
    hbar: 6.626_070_15e-34 / (2.0 * PI),
    c: 299_792_458.0,
    e: 1.602_176_634e-19,
    a0: 5.291_772_109_03e-11,
    m_e: 9.109_383_701_5e-31,
    hartree: 4.359_744_722_207_1e-18,
    epsilon0: 8.854_187_812_8e-12,
    au_polarizability: 1.648_777_274_36e-41,
    amu: 1.660_539_066_60e-27,
};

/// Provenance of [`CODATA2018`].
pub const CONSTANTS_SOURCE: &str = "CODATA 2018 recommended values (Tiesinga et al., Rev. Mod. Phys. 93, 025010 (2021))";

impl PhysicalConstants {
    /// Hartree energy divided by hbar, rad/s. Converts a.u. energy denominators.
    pub fn hartree_angular_frequency(&self) -> f64 {
        self.hartree / self.hbar
    }

    /// Squared field amplitude E0^2 (V^2/m^2) of a running wave of the given intensity.
    pub fn field_amplitude_squared(&self, intensity_w_m2: f64) -> f64 {
        2.0 * intensity_w_m2 / (self.c * self.epsilon0)
    }

    /// Vacuum wavelength (nm) to angular frequency (rad/s).
    pub fn angular_frequency_from_nm(&self, wavelength_nm: f64) -> f64 {
        2.0 * PI * self.c / (wavelength_nm * 1e-9)
    }

    /// Vacuum wavelength (nm) to frequency (Hz).
    pub fn frequency_from_nm(&self, wavelength_nm: f64) -> f64 {
        self.c / (wavelength_nm * 1e-9)
    }

    /// Frequency (Hz) to vacuum wavelength (nm).
    pub fn nm_from_frequency(&self, frequency_hz: f64) -> f64 {
        self.c / frequency_hz * 1e9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn au_polarizability_matches_definition() {
        let k = CODATA2018;
        let derived = 4.0 * PI * k.epsilon0 * k.a0.powi(3);
        assert!((derived / k.au_polarizability - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hartree_consistent_with_bohr_radius() {
        let k = CODATA2018;
        // E_h = hbar^2 / (m_e a0^2)
        let derived = k.hbar * k.hbar / (k.m_e * k.a0 * k.a0);
        assert!((derived / k.hartree - 1.0).abs() < 1e-9);
    }
}
