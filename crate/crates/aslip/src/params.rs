//! Physical parameters and the leg spring law.

use serde::{Deserialize, Serialize};

use crate::error::{AslipError, Result};

/// Point-mass biped parameters. Legs are massless prismatic actuators in
/// series with a spring whose stiffness and damping depend on the actuated
/// leg length `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AslipParams {
    /// Mass (kg).
    pub m: f64,
    /// Gravity (m/s²).
    pub g: f64,
    /// Stiffness polynomial in `L`, ascending powers (N/m per mᵏ).
    pub spring_stiffness_coeffs: Vec<f64>,
    /// Damping polynomial in `L`, ascending powers (N·s/m per mᵏ).
    pub spring_damping_coeffs: Vec<f64>,
    /// Admissible actuated leg length (m).
    pub leg_length_range: (f64, f64),
}

impl Default for AslipParams {
    fn default() -> Self {
        Self {
            m: 33.0,
            g: 9.81,
            spring_stiffness_coeffs: vec![8000.0, -3000.0],
            spring_damping_coeffs: vec![35.0],
            leg_length_range: (0.5, 1.0),
        }
    }
}

/// Horner evaluation, coefficients in ascending order.
fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl AslipParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AslipError::InvalidParams(msg));
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("mass must be positive, got {}", self.m));
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return bad(format!("gravity must be positive, got {}", self.g));
        }
        let (lo, hi) = self.leg_length_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad(format!("leg length range ({lo}, {hi}) is empty"));
        }
        if self.spring_stiffness_coeffs.is_empty() {
            return bad("stiffness polynomial has no coefficients".into());
        }
        // Polynomials of modest degree: a dense scan is enough to catch sign
        // changes inside the range.
        for i in 0..=200 {
            let l = lo + (hi - lo) * i as f64 / 200.0;
            if self.stiffness(l) <= 0.0 {
                return bad(format!("stiffness not positive at L = {l}"));
            }
            if self.damping(l) < 0.0 {
                return bad(format!("damping negative at L = {l}"));
            }
        }
        Ok(())
    }

    pub fn stiffness(&self, leg_length: f64) -> f64 {
        poly(&self.spring_stiffness_coeffs, leg_length)
    }

    pub fn damping(&self, leg_length: f64) -> f64 {
        poly(&self.spring_damping_coeffs, leg_length)
    }

    /// d/dL of the stiffness polynomial.
    pub fn stiffness_slope(&self, leg_length: f64) -> f64 {
        poly_derivative(&self.spring_stiffness_coeffs, leg_length)
    }

    pub fn damping_slope(&self, leg_length: f64) -> f64 {
        poly_derivative(&self.spring_damping_coeffs, leg_length)
    }

    pub fn check_leg_length(&self, leg_length: f64) -> Result<()> {
        let (min, max) = self.leg_length_range;
        if leg_length >= min && leg_length <= max {
            Ok(())
        } else {
            Err(AslipError::LegLengthOutOfRange {
                length: leg_length,
                min,
                max,
            })
        }
    }

    pub fn weight(&self) -> f64 {
        self.m * self.g
    }
}

fn poly_derivative(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
}

/// Spring force along the leg, positive when pushing the mass away from the
/// foot. The raw value is returned; unloading is detected by the simulator's
/// lift-off guard, not by clamping here.
pub fn spring_force(
    leg_length: f64,
    deflection: f64,
    deflection_rate: f64,
    params: &AslipParams,
) -> Result<f64> {
    params.check_leg_length(leg_length)?;
    Ok(params.stiffness(leg_length) * deflection + params.damping(leg_length) * deflection_rate)
}
