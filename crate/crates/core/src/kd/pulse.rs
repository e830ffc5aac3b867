use serde::{Deserialize, Serialize};

use super::KdError;

/// Minimum number of envelope samples for the quadrature.
pub const MIN_PULSE_SAMPLES: usize = 100;

/// Sampled intensity envelope `I(t)/I_max` of a lattice pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseProfile {
    /// Switch-on to switch-off time, µs.
    pub nominal_duration_us: f64,
    pub times_us: Vec<f64>,
    pub envelope: Vec<f64>,
    /// RMS relative intensity fluctuation during the pulse.
    pub rms_fluctuation: f64,
}

impl PulseProfile {
    pub fn square(duration_us: f64, samples: usize) -> Self {
        Self::from_fn(duration_us, samples, |_| 1.0)
    }

    /// Exponential rise and fall with 1/e time `edge_us`, both inside the nominal window.
    pub fn exponential_edges(duration_us: f64, edge_us: f64, samples: usize) -> Self {
        Self::from_fn(duration_us, samples, |t| {
            let rise = 1.0 - (-t / edge_us).exp();
            let fall = 1.0 - (-(duration_us - t) / edge_us).exp();
            rise.min(fall).clamp(0.0, 1.0)
        })
    }

    pub fn from_fn(duration_us: f64, samples: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = samples.max(2);
        let times_us: Vec<f64> = (0..n).map(|k| duration_us * k as f64 / (n - 1) as f64).collect();
        let envelope = times_us.iter().map(|&t| f(t)).collect();
        Self {
            nominal_duration_us: duration_us,
            times_us,
            envelope,
            rms_fluctuation: 0.0,
        }
    }

    pub fn with_fluctuation(mut self, rms: f64) -> Self {
        self.rms_fluctuation = rms;
        self
    }

    /// Uniformly scaled copy of the envelope.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            envelope: self.envelope.iter().map(|e| e * factor).collect(),
            ..self.clone()
        }
    }

    /// RMS lattice-depth spread implied by the intensity fluctuation (V0 is linear in I).
    pub fn depth_fluctuation(&self, v0_er: f64) -> f64 {
        v0_er.abs() * self.rms_fluctuation
    }

    pub fn validate(&self) -> Result<(), KdError> {
        if self.envelope.is_empty() {
            return Err(KdError::EmptyPulse);
        }
        if self.times_us.len() != self.envelope.len() {
            return Err(KdError::InvalidPulse(format!(
                "{} times for {} envelope samples",
                self.times_us.len(),
                self.envelope.len()
            )));
        }
        if self.envelope.len() < MIN_PULSE_SAMPLES {
            return Err(KdError::InvalidPulse(format!(
                "{} samples, at least {MIN_PULSE_SAMPLES} required",
                self.envelope.len()
            )));
        }
        if let Some((k, v)) = self
            .envelope
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(KdError::InvalidPulse(format!("envelope[{k}] = {v} outside [0, 1]")));
        }
        if self.times_us.windows(2).any(|w| !(w[1] > w[0])) || !self.times_us.iter().all(|t| t.is_finite()) {
            return Err(KdError::InvalidPulse("sample times must be finite and increasing".into()));
        }
        if !(self.nominal_duration_us > 0.0) {
            return Err(KdError::InvalidPulse(format!(
                "nominal duration {} µs",
                self.nominal_duration_us
            )));
        }
        if !(self.rms_fluctuation >= 0.0) {
            return Err(KdError::InvalidPulse(format!("rms fluctuation {}", self.rms_fluctuation)));
        }
        Ok(())
    }
}

/// `integral of I(t)/I_max dt` by the trapezoid rule, µs.
pub fn effective_pulse_duration(profile: &PulseProfile) -> Result<f64, KdError> {
    profile.validate()?;
    Ok(profile
        .times_us
        .windows(2)
        .zip(profile.envelope.windows(2))
        .map(|(t, e)| 0.5 * (t[1] - t[0]) * (e[0] + e[1]))
        .sum())
}
