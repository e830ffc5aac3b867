//! Kapitza-Dirac diffraction in the Raman-Nath regime.
//!
//! A standing wave of depth `V0` pulsed for `tau` puts a fraction
//! `P_N = J_N(x)^2` of the atoms into momentum `2 N hbar k`, where
//! `x = (V0 / hbar) tau / 2`. Depths are in photon recoils `E_r`, times in µs.

mod bessel;
mod invert;
mod pulse;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use bessel::{bessel_j, bessel_j_all};
pub use invert::{invert_depth, DepthEstimate, InversionOptions};
pub use pulse::{effective_pulse_duration, PulseProfile, MIN_PULSE_SAMPLES};

/// Depth below which the Raman-Nath approximation is taken to hold, E_r.
pub const RAMAN_NATH_BOUND_ER: f64 = 125.0;
/// Default margin above which [`raman_nath_check`] warns.
pub const RAMAN_NATH_WARN_FRACTION: f64 = 0.2;
/// Largest neglected population tail of the adaptive truncation.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KdError {
    #[error("pulse envelope is empty")]
    EmptyPulse,
    #[error("invalid pulse profile: {0}")]
    InvalidPulse(String),
    #[error("order {0} is required for the depth inversion")]
    MissingOrder(i32),
    #[error("invalid population for order {order}: {reason}")]
    InvalidPopulation { order: i32, reason: String },
    #[error("lattice depth is unidentifiable: {0}")]
    Unidentifiable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Occupation of each diffraction order, with optional one-sigma errors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentumPopulations {
    pub populations: BTreeMap<i32, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sigmas: BTreeMap<i32, f64>,
}

impl MomentumPopulations {
    pub fn new(populations: BTreeMap<i32, f64>) -> Self {
        Self {
            populations,
            sigmas: BTreeMap::new(),
        }
    }

    pub fn with_sigmas(mut self, sigmas: BTreeMap<i32, f64>) -> Self {
        self.sigmas = sigmas;
        self
    }

    pub fn get(&self, order: i32) -> f64 {
        self.populations.get(&order).copied().unwrap_or(0.0)
    }

    pub fn sigma(&self, order: i32) -> Option<f64> {
        self.sigmas.get(&order).copied()
    }

    pub fn total(&self) -> f64 {
        self.populations.values().sum()
    }

    pub fn max_order(&self) -> i32 {
        self.populations.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    /// Copy normalised to unit total; sigmas scale with the populations.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        if t <= 0.0 {
            return self.clone();
        }
        Self {
            populations: self.populations.iter().map(|(&n, &p)| (n, p / t)).collect(),
            sigmas: self.sigmas.iter().map(|(&n, &s)| (n, s / t)).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), KdError> {
        for (&order, &p) in &self.populations {
            if !p.is_finite() || p < 0.0 {
                return Err(KdError::InvalidPopulation {
                    order,
                    reason: format!("population {p}"),
                });
            }
        }
        for (&order, &s) in &self.sigmas {
            if !(s.is_finite() && s > 0.0) {
                return Err(KdError::InvalidPopulation {
                    order,
                    reason: format!("sigma {s}"),
                });
            }
        }
        Ok(())
    }
}

/// Bessel argument `x = (V0/hbar) tau / 2` for `V0` in E_r, `tau` in µs and `E_r/h` in Hz.
pub fn kd_phase(v0_er: f64, tau_us: f64, recoil_hz: f64) -> f64 {
    v0_er * 2.0 * PI * recoil_hz * tau_us * 1e-6 / 2.0
}

/// Depth (E_r) giving Bessel argument `x`.
pub fn depth_from_phase(x: f64, tau_us: f64, recoil_hz: f64) -> f64 {
    x / (PI * recoil_hz * tau_us * 1e-6)
}

/// `P_N = J_N(x)^2` for a known Bessel argument.
pub fn populations_from_phase(x: f64, n_max: Option<u32>) -> MomentumPopulations {
    let x = x.abs();
    let guess = x as usize + 30 + (10.0 * x).sqrt() as usize;
    let limit = n_max.map_or(guess, |n| n as usize);
    let j = bessel_j_all(limit.max(guess), x);
    let n_keep = match n_max {
        Some(n) => n as usize,
        None => {
            // Smallest N whose two-sided tail is below tolerance.
            let mut tail = 0.0;
            let mut keep = j.len() - 1;
            for n in (1..j.len()).rev() {
                tail += 2.0 * j[n] * j[n];
                if tail >= TAIL_TOLERANCE {
                    break;
                }
                keep = n - 1;
            }
            keep
        }
    };
    let mut populations = BTreeMap::new();
    for (n, jn) in j.iter().enumerate().take(n_keep + 1) {
        let p = jn * jn;
        populations.insert(n as i32, p);
        if n > 0 {
            populations.insert(-(n as i32), p);
        }
    }
    MomentumPopulations::new(populations)
}

/// Raman-Nath order populations after a pulse of depth `v0_er` and effective length `tau_us`.
///
/// `n_max = None` keeps orders until the neglected tail is below [`TAIL_TOLERANCE`].
pub fn diffraction_populations(v0_er: f64, tau_us: f64, recoil_hz: f64, n_max: Option<u32>) -> MomentumPopulations {
    populations_from_phase(kd_phase(v0_er, tau_us, recoil_hz), n_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanNath {
    /// `|V0| / 125 E_r`.
    pub margin: f64,
    pub verdict: Verdict,
    pub tau_us: f64,
}

pub fn raman_nath_check(v0_er: f64, tau_us: f64) -> RamanNath {
    raman_nath_check_with(v0_er, tau_us, RAMAN_NATH_WARN_FRACTION)
}

pub fn raman_nath_check_with(v0_er: f64, tau_us: f64, warn_fraction: f64) -> RamanNath {
    let margin = v0_er.abs() / RAMAN_NATH_BOUND_ER;
    RamanNath {
        margin,
        verdict: if margin > warn_fraction { Verdict::Warn } else { Verdict::Pass },
        tau_us,
    }
}

#[cfg(test)]
mod tests;
