//! Physical parameters of the modulated qubit and its Lorentzian reservoir.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which rate sets the time unit of a parameter set.
///
/// Purely descriptive: the numerics never rescale anything based on it, it
/// only travels into output provenance so that `t = 10` can be read as
/// `γt = 10` or `λt = 10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Gamma,
    Lambda,
    #[default]
    Absolute,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Gamma => "gamma",
            Unit::Lambda => "lambda",
            Unit::Absolute => "absolute",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(Unit::Gamma),
            "lambda" => Ok(Unit::Lambda),
            "absolute" => Ok(Unit::Absolute),
            other => Err(Error::validation(
                "units",
                format!("expected gamma, lambda or absolute, got {other:?}"),
            )),
        }
    }
}

/// Coupling, reservoir width, modulation and initial-state angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Decay-coupling rate γ.
    pub gamma: f64,
    /// Lorentzian spectral width λ.
    pub lambda: f64,
    /// Modulation amplitude δ.
    pub delta: f64,
    /// Modulation angular frequency Ω.
    pub omega_mod: f64,
    /// Initial polar angle on the Bloch sphere.
    pub theta: f64,
    /// Initial azimuth.
    pub phi: f64,
    pub unit: Unit,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gamma: 1.0,
            lambda: 1.0,
            delta: 0.0,
            omega_mod: 0.0,
            theta: 0.0,
            phi: 0.0,
            unit: Unit::Absolute,
        }
    }
}

impl ModelParams {
    pub fn new(gamma: f64, lambda: f64) -> Self {
        ModelParams {
            gamma,
            lambda,
            ..Default::default()
        }
    }

    pub fn with_modulation(mut self, delta: f64, omega_mod: f64) -> Self {
        self.delta = delta;
        self.omega_mod = omega_mod;
        self
    }

    pub fn with_state(mut self, theta: f64, phi: f64) -> Self {
        self.theta = theta;
        self.phi = phi;
        self
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    /// Checks every field invariant and names the first offending field.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, ok: bool, what: &str| -> Result<()> {
            if !v.is_finite() {
                return Err(Error::validation(name, format!("{v} is not finite")));
            }
            if !ok {
                return Err(Error::validation(name, format!("{v} must be {what}")));
            }
            Ok(())
        };
        check("gamma", self.gamma, self.gamma > 0.0, "> 0")?;
        check("lambda", self.lambda, self.lambda > 0.0, "> 0")?;
        check("delta", self.delta, self.delta >= 0.0, ">= 0")?;
        check("omega", self.omega_mod, self.omega_mod >= 0.0, ">= 0")?;
        check(
            "theta",
            self.theta,
            (0.0..=PI).contains(&self.theta),
            "in [0, π]",
        )?;
        check("phi", self.phi, (0.0..TAU).contains(&self.phi), "in [0, 2π)")?;
        Ok(())
    }

    /// True when both modulation parameters vanish.
    pub fn is_unmodulated(&self) -> bool {
        self.delta == 0.0 && self.omega_mod == 0.0
    }

    /// Modulation phase (δ/Ω)·sin(Ωt); the Ω → 0 limit δt is used for Ω = 0.
    #[inline]
    pub fn modulation_phase(&self, t: f64) -> f64 {
        if self.omega_mod == 0.0 {
            self.delta * t
        } else {
            (self.delta / self.omega_mod) * (self.omega_mod * t).sin()
        }
    }

    /// Time derivative of [`Self::modulation_phase`], δ·cos(Ωt).
    #[inline]
    pub fn modulation_phase_rate(&self, t: f64) -> f64 {
        self.delta * (self.omega_mod * t).cos()
    }

    /// γλ/2, the kernel prefactor.
    #[inline]
    pub fn kernel_strength(&self) -> f64 {
        0.5 * self.gamma * self.lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_fields_by_name() {
        let p = ModelParams::new(0.0, 1.0);
        match p.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "gamma"),
            other => panic!("unexpected {other:?}"),
        }
        let p = ModelParams::new(1.0, 1.0).with_state(4.0, 0.0);
        assert!(matches!(p.validate(), Err(Error::Validation { field, .. }) if field == "theta"));
        let p = ModelParams::new(1.0, 1.0).with_state(0.0, TAU);
        assert!(matches!(p.validate(), Err(Error::Validation { field, .. }) if field == "phi"));
        let p = ModelParams::new(1.0, f64::NAN);
        assert!(p.validate().is_err());
        assert!(ModelParams::new(0.1, 1.0).with_state(PI, 0.0).validate().is_ok());
    }

    #[test]
    fn static_detuning_limit() {
        let p = ModelParams::new(1.0, 1.0).with_modulation(1.0, 0.0);
        assert_eq!(p.modulation_phase(3.0), 3.0);
        let q = ModelParams::new(1.0, 1.0).with_modulation(1.0, 1e-6);
        assert!((q.modulation_phase(3.0) - 3.0).abs() < 1e-10);
    }
}
