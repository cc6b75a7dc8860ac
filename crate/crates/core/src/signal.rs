//! Cosine-filter test signals and supervised windows.
//!
//! Time steps inside a [`Dataset`] are 1-based (`t = 1..=window_length`) and
//! variables are 0-based: variable `m` reads the signal `m + 1` steps ahead.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SignalKind {
    Cosine,
    VariableCycleCosine,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub amplitude: f64,
    /// Period in time steps (the starting period for the variable-cycle form).
    pub period: f64,
    /// Final period of the variable-cycle form; ignored for plain cosine.
    pub period_end: f64,
    pub length: usize,
    pub phase: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            kind: SignalKind::Cosine,
            amplitude: 1.0,
            period: 22.0,
            period_end: 11.0,
            length: 50,
            phase: 0.0,
        }
    }
}

impl SignalSpec {
    pub fn cosine(length: usize) -> Self {
        Self {
            length,
            ..Self::default()
        }
    }

    pub fn variable_cycle(length: usize) -> Self {
        Self {
            kind: SignalKind::VariableCycleCosine,
            length,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidSpec(format!("length must be positive")));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        if !self.amplitude.is_finite() || !self.phase.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "amplitude and phase must be finite"
            )));
        }
        if self.kind == SignalKind::VariableCycleCosine
            && !(self.period_end > 0.0 && self.period_end < self.period)
        {
            return Err(Error::InvalidSpec(format!(
                "variable-cycle period_end must lie in (0, period), got {}",
                self.period_end
            )));
        }
        Ok(())
    }

    /// Period in effect at step `t` (0-based signal index).
    pub fn instantaneous_period(&self, t: usize) -> f64 {
        match self.kind {
            SignalKind::Cosine => self.period,
            SignalKind::VariableCycleCosine => {
                if self.length <= 1 {
                    return self.period;
                }
                let frac = t as f64 / (self.length - 1) as f64;
                self.period + (self.period_end - self.period) * frac
            }
        }
    }
}

/// `y(t) = amplitude * cos(2*pi*t / T(t) + phase)` for `t = 0..length`.
pub fn generate_signal(spec: &SignalSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok((0..spec.length)
        .map(|t| {
            let period = spec.instantaneous_period(t);
            spec.amplitude * libm::cos(2.0 * PI * t as f64 / period + spec.phase)
        })
        .collect())
}

/// Supervised window: `x_m(t) = y(t + m + 1)` and `f(t) = y(t + m_max + 1)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from explicit columns. `inputs[m][t - 1]` is `x_m(t)`.
    pub fn from_columns(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() || targets.is_empty() {
            return Err(Error::Shape(format!("dataset needs inputs and targets")));
        }
        if inputs.iter().any(|col| col.len() != targets.len()) {
            return Err(Error::Shape(format!(
                "input columns must match target length {}",
                targets.len()
            )));
        }
        if inputs.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("dataset values must be finite")));
        }
        Ok(Self { inputs, targets })
    }

    pub fn m_max(&self) -> usize {
        self.inputs.len()
    }

    pub fn window_length(&self) -> usize {
        self.targets.len()
    }

    /// `x_m(t)`, `t` 1-based.
    #[inline]
    pub fn x(&self, m: usize, t: usize) -> f64 {
        self.inputs[m][t - 1]
    }

    /// `f(t)`, `t` 1-based.
    #[inline]
    pub fn f(&self, t: usize) -> f64 {
        self.targets[t - 1]
    }

    pub fn input(&self, m: usize) -> &[f64] {
        &self.inputs[m]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

pub fn build_dataset(y: &[f64], m_max: usize, l_max: usize) -> Result<Dataset> {
    if m_max == 0 || l_max == 0 {
        return Err(Error::Shape(format!("m_max and l_max must be positive")));
    }
    let needed = l_max + m_max + 1;
    if y.len() <= needed {
        return Err(Error::Window {
            len: y.len(),
            needed,
        });
    }
    let inputs = (1..=m_max)
        .map(|m| (1..=l_max).map(|t| y[t + m]).collect())
        .collect();
    let targets = (1..=l_max).map(|t| y[t + m_max + 1]).collect();
    Dataset::from_columns(inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cosine_starts_at_amplitude_and_flips_at_half_period() {
        let y = generate_signal(&SignalSpec::cosine(50)).unwrap();
        assert_eq!(y[0], 1.0);
        assert!((y[11] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn variable_cycle_reaches_final_period() {
        let spec = SignalSpec {
            kind: SignalKind::VariableCycleCosine,
            period: 22.0,
            period_end: 11.0,
            length: 88,
            ..SignalSpec::default()
        };
        assert!((spec.instantaneous_period(87) - 11.0).abs() < 1e-9);
        assert!((spec.instantaneous_period(0) - 22.0).abs() < 1e-12);
        assert_eq!(generate_signal(&spec).unwrap().len(), 88);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SignalSpec::cosine(50);
        spec.period = 0.0;
        assert!(matches!(generate_signal(&spec), Err(Error::InvalidSpec(_))));
        let spec = SignalSpec::cosine(0);
        assert!(matches!(generate_signal(&spec), Err(Error::InvalidSpec(_))));
        let mut spec = SignalSpec::variable_cycle(50);
        spec.period_end = 30.0;
        assert!(matches!(generate_signal(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn constant_signal_propagates() {
        let y = vec![0.7; 60];
        let d = build_dataset(&y, 4, 44).unwrap();
        for t in 1..=44 {
            assert_eq!(d.f(t), 0.7);
            for m in 0..4 {
                assert_eq!(d.x(m, t), 0.7);
            }
        }
    }

    #[test]
    fn ramp_indices() {
        let y: Vec<f64> = (0..60).map(|t| t as f64).collect();
        let d = build_dataset(&y, 4, 44).unwrap();
        // x_2(3) = y(5), f(3) = y(8); variable 2 is index 1
        assert_eq!(d.x(1, 3), 5.0);
        assert_eq!(d.f(3), 8.0);
    }

    #[test]
    fn short_signal_is_a_window_error() {
        let y = vec![0.0; 49];
        assert!(matches!(
            build_dataset(&y, 4, 44),
            Err(Error::Window { .. })
        ));
        assert!(build_dataset(&vec![0.0; 50], 4, 44).is_ok());
    }
}
