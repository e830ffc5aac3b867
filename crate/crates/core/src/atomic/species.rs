//! Species data files: loading, validation and serialisation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spin::Spin;

/// Format tag written in the header of every species file.
pub const FORMAT_TAG: &str = "tuneout-species";
/// Highest file version this crate reads.
pub const FORMAT_VERSION: u32 = 1;

/// Bundled Rubidium-87 dataset.
pub const RB87_TOML: &str = include_str!("../../data/rb87.toml");

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read species file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse species file: {0}")]
    Parse(String),
    #[error("mandatory transition line `{0}` is missing")]
    MissingLine(String),
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown datum path `{0}`")]
    UnknownDatum(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> DataError {
    DataError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// A number together with its 1-sigma uncertainty and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Datum {
    pub value: f64,
    #[serde(default)]
    pub sigma: f64,
    pub source: String,
}

impl Datum {
    pub fn new(value: f64, sigma: f64, source: impl Into<String>) -> Self {
        Self {
            value,
            sigma,
            source: source.into(),
        }
    }

    fn validate(&self, field: &str) -> Result<(), DataError> {
        if !self.value.is_finite() {
            return Err(invalid(field, "value is not finite"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(invalid(field, "sigma must be finite and non-negative"));
        }
        if self.source.trim().is_empty() {
            return Err(invalid(field, "provenance string is empty"));
        }
        Ok(())
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} +/- {} [{}]", self.value, self.sigma, self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesInfo {
    pub name: String,
    pub nuclear_spin: Spin,
    pub mass_kg: Datum,
}

/// A fine-structure level `n L_J` with its hyperfine constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FineLevel {
    pub label: String,
    pub n: u32,
    pub j: Spin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_levels: Option<Vec<Spin>>,
    pub hyperfine_a_hz: Datum,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperfine_b_hz: Option<Datum>,
    /// Documented splitting between the highest and lowest F level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperfine_splitting_hz: Option<Datum>,
}

impl FineLevel {
    pub fn b_hz(&self) -> f64 {
        self.hyperfine_b_hz.as_ref().map_or(0.0, |d| d.value)
    }
}

/// An electric-dipole line between two fine-structure levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionLine {
    pub name: String,
    pub lower: String,
    pub upper: String,
    /// Centroid-to-centroid vacuum frequency.
    pub frequency_hz: Datum,
    /// `<J||er||J'>` in e a0, Steck normalisation, magnitude only.
    pub reduced_dipole_au: Datum,
    /// Natural line width Gamma / 2 pi.
    pub linewidth_hz: Datum,
}

/// Line-strength ratio `R = |d(numerator)|^2 / |d(denominator)|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleRatio {
    pub numerator: String,
    pub denominator: String,
    pub value: Datum,
}

/// Wavelength-independent scalar polarizabilities not covered by the listed lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualPolarizability {
    pub level: String,
    /// Transitions to higher valence states (fine structure only).
    pub higher_states_au: Datum,
    /// Core electrons and core-valence interaction.
    pub core_au: Datum,
}

/// Validated atomic data for one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesData {
    pub format: String,
    pub version: u32,
    pub species: SpeciesInfo,
    #[serde(rename = "level")]
    pub levels: Vec<FineLevel>,
    #[serde(rename = "line")]
    pub lines: Vec<TransitionLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole_ratio: Option<DipoleRatio>,
    pub residual: ResidualPolarizability,
}

/// How the reduced dipole elements of the D lines are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixElements {
    /// Every line uses its own tabulated element.
    Direct,
    /// The ratio's denominator line is derived from the numerator line and `R`.
    Ratio,
}

impl fmt::Display for MatrixElements {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixElements::Direct => f.write_str("direct"),
            MatrixElements::Ratio => f.write_str("ratio"),
        }
    }
}

/// Reads and validates a species file.
pub fn load_species_data(path: impl AsRef<Path>) -> Result<SpeciesData, DataError> {
    let text = std::fs::read_to_string(path)?;
    SpeciesData::from_toml_str(&text)
}

impl SpeciesData {
    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let data: SpeciesData = toml::from_str(text).map_err(|e| DataError::Parse(e.to_string()))?;
        data.validate()?;
        Ok(data)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("species data is always representable as TOML")
    }

    /// The bundled Rubidium-87 dataset.
    pub fn rubidium87() -> Self {
        Self::from_toml_str(RB87_TOML).expect("bundled dataset is valid")
    }

    pub fn level(&self, label: &str) -> Option<&FineLevel> {
        self.levels.iter().find(|l| l.label == label)
    }

    pub fn line(&self, name: &str) -> Option<&TransitionLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    /// Level matching `(n, J)`.
    pub fn level_by_quantum_numbers(&self, n: u32, j: Spin) -> Option<&FineLevel> {
        self.levels.iter().find(|l| l.n == n && l.j == j)
    }

    /// Lines whose lower level is `label`.
    pub fn lines_from<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a TransitionLine> + 'a {
        self.lines.iter().filter(move |l| l.lower == label)
    }

    /// Reduced element `<J||er||J'>` (Steck normalisation) used for `line`.
    pub fn reduced_dipole(&self, line: &TransitionLine, elements: MatrixElements) -> f64 {
        if let (MatrixElements::Ratio, Some(ratio)) = (elements, &self.dipole_ratio) {
            if line.name == ratio.denominator {
                if let Some(reference) = self.line(&ratio.numerator) {
                    return reference.reduced_dipole_au.value / ratio.value.value.sqrt();
                }
            }
        }
        line.reduced_dipole_au.value
    }

    /// Ratio parametrisation when the file provides one, direct elements otherwise.
    pub fn default_matrix_elements(&self) -> MatrixElements {
        if self.dipole_ratio.is_some() {
            MatrixElements::Ratio
        } else {
            MatrixElements::Direct
        }
    }

    fn visit_data_mut(&mut self, mut f: impl FnMut(String, &mut Datum)) {
        f("species.mass_kg".into(), &mut self.species.mass_kg);
        for level in &mut self.levels {
            let l = &level.label;
            f(format!("level.{l}.hyperfine_a_hz"), &mut level.hyperfine_a_hz);
            if let Some(b) = level.hyperfine_b_hz.as_mut() {
                f(format!("level.{l}.hyperfine_b_hz"), b);
            }
            if let Some(s) = level.hyperfine_splitting_hz.as_mut() {
                f(format!("level.{l}.hyperfine_splitting_hz"), s);
            }
        }
        for line in &mut self.lines {
            let n = &line.name;
            f(format!("line.{n}.frequency_hz"), &mut line.frequency_hz);
            f(format!("line.{n}.reduced_dipole_au"), &mut line.reduced_dipole_au);
            f(format!("line.{n}.linewidth_hz"), &mut line.linewidth_hz);
        }
        if let Some(r) = self.dipole_ratio.as_mut() {
            f("dipole_ratio.value".into(), &mut r.value);
        }
        f("residual.higher_states_au".into(), &mut self.residual.higher_states_au);
        f("residual.core_au".into(), &mut self.residual.core_au);
    }

    /// Paths and values of every datum in the file.
    pub fn data(&self) -> Vec<(String, Datum)> {
        let mut copy = self.clone();
        let mut out = Vec::new();
        copy.visit_data_mut(|path, d| out.push((path, d.clone())));
        out
    }

    /// A copy with `delta` added to the datum at `path`.
    pub fn with_offset(&self, path: &str, delta: f64) -> Result<SpeciesData, DataError> {
        let mut copy = self.clone();
        let mut found = false;
        copy.visit_data_mut(|p, d| {
            if p == path {
                d.value += delta;
                found = true;
            }
        });
        if found {
            Ok(copy)
        } else {
            Err(DataError::UnknownDatum(path.to_string()))
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.format != FORMAT_TAG {
            return Err(invalid("format", format!("expected `{FORMAT_TAG}`, found `{}`", self.format)));
        }
        if self.version == 0 || self.version > FORMAT_VERSION {
            return Err(invalid("version", format!("unsupported version {}", self.version)));
        }
        let mut copy = self.clone();
        let mut first_error = None;
        copy.visit_data_mut(|path, d| {
            if first_error.is_none() {
                first_error = d.validate(&path).err();
            }
        });
        if let Some(e) = first_error {
            return Err(e);
        }
        let i = self.species.nuclear_spin;
        if i.twice() < 0 {
            return Err(invalid("species.nuclear_spin", "must be non-negative"));
        }
        if self.species.mass_kg.value <= 0.0 {
            return Err(invalid("species.mass_kg", "must be positive"));
        }
        for (k, level) in self.levels.iter().enumerate() {
            let field = |name: &str| format!("level.{}.{name}", level.label);
            if self.levels[..k].iter().any(|l| l.label == level.label) {
                return Err(invalid(field("label"), "duplicate level label"));
            }
            if level.j.twice() <= 0 {
                return Err(invalid(field("j"), "J must be at least 1/2"));
            }
            for &f in level.f_levels.iter().flatten() {
                if !Spin::triangle(i, level.j, f) {
                    return Err(invalid(
                        field("f_levels"),
                        format!("F = {f} violates |I - J| <= F <= I + J for I = {i}, J = {}", level.j),
                    ));
                }
            }
        }
        for line in &self.lines {
            let field = |name: &str| format!("line.{}.{name}", line.name);
            let lower = self
                .level(&line.lower)
                .ok_or_else(|| invalid(field("lower"), format!("unknown level `{}`", line.lower)))?;
            let upper = self
                .level(&line.upper)
                .ok_or_else(|| invalid(field("upper"), format!("unknown level `{}`", line.upper)))?;
            if line.frequency_hz.value <= 0.0 {
                return Err(invalid(field("frequency_hz"), "must be positive"));
            }
            if line.reduced_dipole_au.value <= 0.0 {
                return Err(invalid(field("reduced_dipole_au"), "must be positive (magnitude convention)"));
            }
            if line.linewidth_hz.value < 0.0 {
                return Err(invalid(field("linewidth_hz"), "must be non-negative"));
            }
            if !Spin::triangle(lower.j, upper.j, Spin::ONE) {
                return Err(invalid(
                    field("upper"),
                    format!("J = {} -> J' = {} is not dipole allowed", lower.j, upper.j),
                ));
            }
        }
        for name in ["D1", "D2"] {
            if self.line(name).is_none() {
                return Err(DataError::MissingLine(name.to_string()));
            }
        }
        if let Some(ratio) = &self.dipole_ratio {
            for (key, name) in [("numerator", &ratio.numerator), ("denominator", &ratio.denominator)] {
                if self.line(name).is_none() {
                    return Err(invalid(format!("dipole_ratio.{key}"), format!("unknown line `{name}`")));
                }
            }
            if ratio.value.value <= 0.0 {
                return Err(invalid("dipole_ratio.value", "must be positive"));
            }
        }
        if self.level(&self.residual.level).is_none() {
            return Err(invalid(
                "residual.level",
                format!("unknown level `{}`", self.residual.level),
            ));
        }
        Ok(())
    }
}
