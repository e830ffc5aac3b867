//! Dynamic scalar, vector and tensor polarizabilities from hyperfine-resolved
//! line sums, and the ac Stark shift they produce.
//!
//! Polarizabilities are in atomic units (4 pi eps0 a0^3). The shift of
//! `|F m_F>` in a field of amplitude `E0` is
//!
//! ```text
//! V = -(E0/2)^2 [ a_s + C m_F/(2F) a_v - D (3 m_F^2 - F(F+1)) / (2F(2F-1)) a_T ]
//! ```
//!
//! with `C = A cos(theta_k)`, `D = (3 cos^2(theta_p) - 1)/2` and `A = sin(2 theta_0)`.
//! Counter-rotating terms are kept in every denominator; line widths are not.

mod light;

use serde::{Deserialize, Serialize};

use crate::atomic::{
    hyperfine_level_energy, reduced_hf_matrix_element, wigner_6j, HyperfineError, HyperfineState, MatrixElements,
    SpeciesData, Spin,
};
use crate::constants::{PhysicalConstants, CODATA2018};

pub use light::{polarization_params, LightField, PolarizationParams};

/// Default resonance guard, in natural line widths.
pub const DEFAULT_GUARD_LINEWIDTHS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StarkError {
    #[error("wavelength {wavelength_nm} nm is within {guard_linewidths} line widths of the {line} F={f_lower} -> F'={f_upper} resonance (detuning {detuning_hz:.3e} Hz)")]
    ResonanceGuard {
        wavelength_nm: f64,
        line: String,
        f_lower: Spin,
        f_upper: Spin,
        detuning_hz: f64,
        guard_linewidths: f64,
    },
    #[error("no fine-structure level with n = {n}, J = {j} in the species data")]
    UnknownLevel { n: u32, j: Spin },
    #[error("state nuclear spin I = {state} does not match species I = {species}")]
    NuclearSpin { state: Spin, species: Spin },
    #[error("no transition lines start from level {0}")]
    NoLines(String),
    #[error("invalid light field: {0}")]
    InvalidLight(String),
    #[error("m_F = {m} is not a projection of F = {f}")]
    Projection { f: Spin, m: Spin },
    #[error(transparent)]
    Hyperfine(#[from] HyperfineError),
}

/// Scalar, vector and tensor polarizability of one `F` level at one wavelength (a.u.).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolarizabilitySet {
    pub scalar: f64,
    pub vector: f64,
    pub tensor: f64,
}

/// Which contributions enter the Stark shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggles {
    pub tensor: bool,
    /// Scalar term of transitions to higher valence states.
    pub higher_states: bool,
    /// Scalar core and core-valence term.
    pub core: bool,
    pub vector: bool,
}

impl Toggles {
    pub const ALL: Toggles = Toggles {
        tensor: true,
        higher_states: true,
        core: true,
        vector: true,
    };
    pub const D_LINES_SCALAR: Toggles = Toggles {
        tensor: false,
        higher_states: false,
        core: false,
        vector: false,
    };
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub matrix_elements: MatrixElements,
    pub guard_linewidths: f64,
}

impl ModelOptions {
    pub fn for_data(data: &SpeciesData) -> Self {
        Self {
            matrix_elements: data.default_matrix_elements(),
            guard_linewidths: DEFAULT_GUARD_LINEWIDTHS,
        }
    }
}

/// One hyperfine component `F -> F'` of a line.
#[derive(Debug, Clone)]
struct Component {
    line: String,
    f_upper: Spin,
    frequency_hz: f64,
    linewidth_hz: f64,
    /// Angular and radial factor of the rank-K sum, before the energy denominator.
    rank_weights: [f64; 3],
}

/// Energy shift in several units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkShift {
    pub hz: f64,
    /// In photon recoils `E_r` at the light wavelength.
    pub recoil: f64,
    /// The bracketed effective polarizability (a.u.).
    pub polarizability_au: f64,
}

/// Polarizability model of one hyperfine level, with all angular factors precomputed.
#[derive(Debug, Clone)]
pub struct StarkModel {
    f: Spin,
    components: Vec<Component>,
    higher_states_au: f64,
    core_au: f64,
    mass_kg: f64,
    guard_linewidths: f64,
    constants: PhysicalConstants,
}

impl StarkModel {
    pub fn new(data: &SpeciesData, state: &HyperfineState, options: ModelOptions) -> Result<Self, StarkError> {
        let i = data.species.nuclear_spin;
        if state.i() != i {
            return Err(StarkError::NuclearSpin {
                state: state.i(),
                species: i,
            });
        }
        let lower = data
            .level_by_quantum_numbers(state.n(), state.j())
            .ok_or(StarkError::UnknownLevel {
                n: state.n(),
                j: state.j(),
            })?;
        let f = state.f();
        let lower_shift = hyperfine_level_energy(lower.j, lower.hyperfine_a_hz.value, lower.b_hz(), i, f)?;
        let mut components = Vec::new();
        for line in data.lines_from(&lower.label) {
            let upper = data.level(&line.upper).expect("validated species data");
            // Steck normalisation -> Wigner-Eckart reduced element.
            let reduced_j = data.reduced_dipole(line, options.matrix_elements) * f64::from(lower.j.multiplicity()).sqrt();
            for f_upper in Spin::coupled(i, upper.j) {
                if !Spin::triangle(f, f_upper, Spin::ONE) {
                    continue;
                }
                let d = reduced_hf_matrix_element(lower.j, upper.j, reduced_j, i, f, f_upper)?;
                let upper_shift = hyperfine_level_energy(upper.j, upper.hyperfine_a_hz.value, upper.b_hz(), i, f_upper)?;
                let mut rank_weights = [0.0; 3];
                for (k, w) in rank_weights.iter_mut().enumerate() {
                    let ks = Spin::integer(k as i32);
                    let phase = (ks + f + Spin::ONE + f_upper).twice() / 2;
                    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    *w = sign
                        * ((2 * k + 1) as f64).sqrt()
                        * wigner_6j(Spin::ONE, ks, Spin::ONE, f, f_upper, f)
                        * d
                        * d;
                }
                components.push(Component {
                    line: line.name.clone(),
                    f_upper,
                    frequency_hz: line.frequency_hz.value + upper_shift - lower_shift,
                    linewidth_hz: line.linewidth_hz.value,
                    rank_weights,
                });
            }
        }
        if components.is_empty() {
            return Err(StarkError::NoLines(lower.label.clone()));
        }
        let (higher_states_au, core_au) = if data.residual.level == lower.label {
            (data.residual.higher_states_au.value, data.residual.core_au.value)
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            f,
            components,
            higher_states_au,
            core_au,
            mass_kg: data.species.mass_kg.value,
            guard_linewidths: options.guard_linewidths,
            constants: CODATA2018,
        })
    }

    pub fn f(&self) -> Spin {
        self.f
    }

    pub fn mass_kg(&self) -> f64 {
        self.mass_kg
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    /// Wavelengths (nm) of every hyperfine component included in the sums.
    pub fn resonance_wavelengths_nm(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| self.constants.nm_from_frequency(c.frequency_hz))
            .collect()
    }

    fn check_guard(&self, wavelength_nm: f64) -> Result<(), StarkError> {
        let nu = self.constants.frequency_from_nm(wavelength_nm);
        for c in &self.components {
            let detuning = c.frequency_hz - nu;
            if detuning.abs() < self.guard_linewidths * c.linewidth_hz {
                return Err(StarkError::ResonanceGuard {
                    wavelength_nm,
                    line: c.line.clone(),
                    f_lower: self.f,
                    f_upper: c.f_upper,
                    detuning_hz: detuning,
                    guard_linewidths: self.guard_linewidths,
                });
            }
        }
        Ok(())
    }

    /// D-line (listed-line) scalar, vector and tensor polarizabilities.
    pub fn d_line(&self, wavelength_nm: f64) -> Result<PolarizabilitySet, StarkError> {
        self.check_guard(wavelength_nm)?;
        let omega = self.constants.angular_frequency_from_nm(wavelength_nm);
        let hartree_omega = self.constants.hartree_angular_frequency();
        let mut rank = [0.0; 3];
        for c in &self.components {
            let omega_c = 2.0 * std::f64::consts::PI * c.frequency_hz;
            let resonant = hartree_omega / (omega_c - omega);
            let counter = hartree_omega / (omega_c + omega);
            for (k, acc) in rank.iter_mut().enumerate() {
                let denominator = if k % 2 == 0 { resonant + counter } else { resonant - counter };
                *acc += c.rank_weights[k] * denominator;
            }
        }
        let f = self.f.value();
        let scalar = rank[0] / (3.0 * (2.0 * f + 1.0)).sqrt();
        let vector = if f > 0.0 {
            -(2.0 * f / ((f + 1.0) * (2.0 * f + 1.0))).sqrt() * rank[1]
        } else {
            0.0
        };
        let tensor = if f > 0.5 {
            2.0 * (2.0 * f * (2.0 * f - 1.0) / (3.0 * (f + 1.0) * (2.0 * f + 1.0) * (2.0 * f + 3.0))).sqrt() * rank[2]
        } else {
            0.0
        };
        Ok(PolarizabilitySet { scalar, vector, tensor })
    }

    /// Residual scalar terms enabled by `toggles`.
    pub fn residual_scalar(&self, toggles: Toggles) -> f64 {
        let mut r = 0.0;
        if toggles.higher_states {
            r += self.higher_states_au;
        }
        if toggles.core {
            r += self.core_au;
        }
        r
    }

    /// D-line scalar plus both residual terms.
    pub fn total_scalar(&self, wavelength_nm: f64) -> Result<f64, StarkError> {
        Ok(self.d_line(wavelength_nm)?.scalar + self.residual_scalar(Toggles::ALL))
    }

    /// The bracket of the shift formula for projection `m_f` (a.u.).
    pub fn effective_polarizability(
        &self,
        wavelength_nm: f64,
        m_f: Spin,
        params: PolarizationParams,
        toggles: Toggles,
    ) -> Result<f64, StarkError> {
        if m_f.abs() > self.f || (self.f - m_f).twice() % 2 != 0 {
            return Err(StarkError::Projection { f: self.f, m: m_f });
        }
        let set = self.d_line(wavelength_nm)?;
        let mut alpha = set.scalar + self.residual_scalar(toggles);
        if toggles.vector {
            alpha += params.c * vector_weight(self.f, m_f) * set.vector;
        }
        if toggles.tensor {
            alpha -= params.d * tensor_weight(self.f, m_f) * set.tensor;
        }
        Ok(alpha)
    }

    /// Stark shift of `|F m_f>` in a running wave.
    pub fn shift(&self, m_f: Spin, light: &LightField, toggles: Toggles) -> Result<StarkShift, StarkError> {
        let params = polarization_params(light);
        let alpha = self.effective_polarizability(light.wavelength_nm, m_f, params, toggles)?;
        let e0_sq = self.constants.field_amplitude_squared(light.intensity_w_m2);
        let joules = -0.25 * e0_sq * alpha * self.constants.au_polarizability;
        let hz = joules / self.constants.h;
        let recoil = hz / recoil_energy(light.wavelength_nm, self.mass_kg);
        Ok(StarkShift {
            hz,
            recoil,
            polarizability_au: alpha,
        })
    }

    /// Lattice depth of two counter-propagating beams, in `E_r`.
    ///
    /// The standing-wave antinode carries four times the single-beam intensity.
    pub fn lattice_depth(&self, m_f: Spin, beam: &LightField, toggles: Toggles) -> Result<f64, StarkError> {
        let standing = LightField {
            intensity_w_m2: 4.0 * beam.intensity_w_m2,
            ..*beam
        };
        Ok(self.shift(m_f, &standing, toggles)?.recoil)
    }

    /// Conversion from effective polarizability (a.u.) to lattice depth (E_r).
    pub fn depth_per_au(&self, beam: &LightField) -> f64 {
        let e0_sq = self.constants.field_amplitude_squared(4.0 * beam.intensity_w_m2);
        -0.25 * e0_sq * self.constants.au_polarizability
            / self.constants.h
            / recoil_energy(beam.wavelength_nm, self.mass_kg)
    }
}

/// `m_F / 2F`, zero for `F = 0`.
pub fn vector_weight(f: Spin, m_f: Spin) -> f64 {
    if f.twice() == 0 {
        0.0
    } else {
        m_f.value() / (2.0 * f.value())
    }
}

/// `(3 m_F^2 - F(F+1)) / (2F(2F-1))`, defined as zero for `F <= 1/2`.
pub fn tensor_weight(f: Spin, m_f: Spin) -> f64 {
    if f.twice() <= 1 {
        return 0.0;
    }
    let fv = f.value();
    let m = m_f.value();
    (3.0 * m * m - f.casimir()) / (2.0 * fv * (2.0 * fv - 1.0))
}

/// Photon recoil energy `h / (2 m lambda^2)` in Hz.
pub fn recoil_energy(wavelength_nm: f64, mass_kg: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    CODATA2018.h / (2.0 * mass_kg * lambda * lambda)
}

/// D-line polarizabilities of `state` with the dataset's default parametrisation.
pub fn d_line_polarizabilities(
    state: &HyperfineState,
    wavelength_nm: f64,
    data: &SpeciesData,
) -> Result<PolarizabilitySet, StarkError> {
    StarkModel::new(data, state, ModelOptions::for_data(data))?.d_line(wavelength_nm)
}

/// D-line scalar plus the residual higher-state and core terms.
pub fn total_scalar_polarizability(
    state: &HyperfineState,
    wavelength_nm: f64,
    data: &SpeciesData,
) -> Result<f64, StarkError> {
    StarkModel::new(data, state, ModelOptions::for_data(data))?.total_scalar(wavelength_nm)
}

/// Full Stark shift of `state` (all contributions).
pub fn ac_stark_shift(state: &HyperfineState, light: &LightField, data: &SpeciesData) -> Result<StarkShift, StarkError> {
    StarkModel::new(data, state, ModelOptions::for_data(data))?.shift(state.m_f(), light, Toggles::ALL)
}

/// Standing-wave lattice depth of `state` in `E_r`.
pub fn lattice_depth(state: &HyperfineState, beam: &LightField, data: &SpeciesData) -> Result<f64, StarkError> {
    StarkModel::new(data, state, ModelOptions::for_data(data))?.lattice_depth(state.m_f(), beam, Toggles::ALL)
}
