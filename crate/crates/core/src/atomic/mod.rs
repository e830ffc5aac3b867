//! Atomic structure: angular-momentum algebra, hyperfine levels and species data.

mod hyperfine;
mod species;
mod spin;
pub mod wigner;

use serde::{Deserialize, Serialize};

pub use hyperfine::{hyperfine_level_energy, reduced_hf_matrix_element, HyperfineError};
pub use species::{
    load_species_data, DataError, Datum, DipoleRatio, FineLevel, MatrixElements, ResidualPolarizability,
    SpeciesData, SpeciesInfo, TransitionLine, FORMAT_TAG, FORMAT_VERSION, RB87_TOML,
};
pub use spin::{Spin, SpinParseError};
pub use wigner::{clebsch_gordan, wigner_3j, wigner_6j, WignerError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("F = {f} cannot couple I = {i} and J = {j}")]
    Triangle { i: Spin, j: Spin, f: Spin },
    #[error("|m_F| = {m} exceeds F = {f}")]
    Projection { f: Spin, m: Spin },
    #[error("F - m_F must be an integer (F = {f}, m_F = {m})")]
    Parity { f: Spin, m: Spin },
}

/// A hyperfine Zeeman sublevel `|n (I J) F m_F>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct HyperfineState {
    n: u32,
    i: Spin,
    j: Spin,
    f: Spin,
    m_f: Spin,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    n: u32,
    i: Spin,
    j: Spin,
    f: Spin,
    m_f: Spin,
}

impl TryFrom<RawState> for HyperfineState {
    type Error = StateError;
    fn try_from(r: RawState) -> Result<Self, StateError> {
        HyperfineState::new(r.n, r.i, r.j, r.f, r.m_f)
    }
}

impl From<HyperfineState> for RawState {
    fn from(s: HyperfineState) -> Self {
        RawState {
            n: s.n,
            i: s.i,
            j: s.j,
            f: s.f,
            m_f: s.m_f,
        }
    }
}

impl HyperfineState {
    pub fn new(n: u32, i: Spin, j: Spin, f: Spin, m_f: Spin) -> Result<Self, StateError> {
        if !Spin::triangle(i, j, f) {
            return Err(StateError::Triangle { i, j, f });
        }
        if m_f.abs() > f {
            return Err(StateError::Projection { f, m: m_f });
        }
        if (f - m_f).twice() % 2 != 0 {
            return Err(StateError::Parity { f, m: m_f });
        }
        Ok(Self { n, i, j, f, m_f })
    }

    /// `|5S_1/2, F, m_F>` of Rubidium-87.
    pub fn rb87_ground(f: i32, m_f: i32) -> Result<Self, StateError> {
        Self::new(5, Spin::from_twice(3), Spin::HALF, Spin::integer(f), Spin::integer(m_f))
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn i(&self) -> Spin {
        self.i
    }
    pub fn j(&self) -> Spin {
        self.j
    }
    pub fn f(&self) -> Spin {
        self.f
    }
    pub fn m_f(&self) -> Spin {
        self.m_f
    }

    /// Same level with a different projection.
    pub fn with_m_f(&self, m_f: Spin) -> Result<Self, StateError> {
        Self::new(self.n, self.i, self.j, self.f, m_f)
    }
}

impl std::fmt::Display for HyperfineState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|n={}, I={}, J={}, F={}, m_F={}>", self.n, self.i, self.j, self.f, self.m_f)
    }
}
