//! Closed-form hybrid dynamics of the planar H-LIP.
//!
//! One step of walking is a single-support phase (SSP) in which the mass
//! obeys `ẍ = λ²x`, followed by a double-support phase (DSP) with constant
//! velocity. Both domain durations are fixed. Two impact maps glue the
//! domains together:
//!
//! * SSP → DSP is the identity (`x⁺ = x⁻`, `ẋ⁺ = ẋ⁻`). It carries no
//!   arithmetic but is still logged as a transition so that traces list every
//!   phase boundary.
//! * DSP → SSP exchanges the support leg: `x⁺ = x⁻ − l`, `ẋ⁺ = ẋ⁻`, where `l`
//!   is the step length from the old stance foot to the new one.
//!
//! Positions are always measured from the current stance foot.

use serde::{Deserialize, Serialize};

use crate::error::{HlipError, Result};

/// Pendulum constants and the fixed domain durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HlipParams {
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Nominal height of the point mass (m).
    pub z0: f64,
    /// Single-support duration (s).
    pub t_ssp: f64,
    /// Double-support duration (s). Zero gives an instantaneous exchange.
    pub t_dsp: f64,
}

impl HlipParams {
    pub fn new(g: f64, z0: f64, t_ssp: f64, t_dsp: f64) -> Result<Self> {
        let params = Self {
            g,
            z0,
            t_ssp,
            t_dsp,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.g, self.z0, self.t_ssp, self.t_dsp]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(HlipError::InvalidParams("non-finite value".into()));
        }
        if self.g <= 0.0 {
            return Err(HlipError::InvalidParams(format!(
                "g = {} must be > 0",
                self.g
            )));
        }
        if self.z0 <= 0.0 {
            return Err(HlipError::InvalidParams(format!(
                "z0 = {} must be > 0",
                self.z0
            )));
        }
        if self.t_ssp < 0.0 {
            return Err(HlipError::InvalidParams(format!(
                "t_ssp = {} must be >= 0",
                self.t_ssp
            )));
        }
        if self.t_dsp < 0.0 {
            return Err(HlipError::InvalidParams(format!(
                "t_dsp = {} must be >= 0",
                self.t_dsp
            )));
        }
        Ok(())
    }

    /// `λ = √(g / z0)`.
    pub fn lambda(&self) -> Result<f64> {
        self.validate()?;
        Ok((self.g / self.z0).sqrt())
    }

    /// Duration of one full step, `T_SSP + T_DSP`.
    pub fn step_period(&self) -> f64 {
        self.t_ssp + self.t_dsp
    }

    pub(crate) fn require_positive_ssp(&self, what: &'static str) -> Result<()> {
        self.validate()?;
        if self.t_ssp > 0.0 {
            Ok(())
        } else {
            Err(HlipError::Singular {
                what,
                t_ssp: self.t_ssp,
            })
        }
    }
}

/// Mass position and velocity relative to the stance foot, in one plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarState {
    pub x: f64,
    pub xdot: f64,
}

impl PlanarState {
    pub const ORIGIN: PlanarState = PlanarState { x: 0.0, xdot: 0.0 };

    pub fn new(x: f64, xdot: f64) -> Self {
        Self { x, xdot }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.xdot.is_finite()
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &PlanarState) -> f64 {
        (self.x - other.x).abs().max((self.xdot - other.xdot).abs())
    }

    fn require_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(HlipError::NonFinite("state"))
        }
    }
}

/// Coefficients of `x(t) = c1·e^{λt} + c2·e^{−λt}` for an SSP arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCoefficients {
    pub c1: f64,
    pub c2: f64,
}

impl FlowCoefficients {
    pub fn from_state(state: PlanarState, lambda: f64) -> Self {
        Self {
            c1: 0.5 * (state.x + state.xdot / lambda),
            c2: 0.5 * (state.x - state.xdot / lambda),
        }
    }

    pub fn evaluate(&self, t: f64, lambda: f64) -> PlanarState {
        let grow = (lambda * t).exp();
        let decay = (-lambda * t).exp();
        PlanarState {
            x: self.c1 * grow + self.c2 * decay,
            xdot: lambda * (self.c1 * grow - self.c2 * decay),
        }
    }
}

/// Closed-form SSP solution after time `t`.
pub fn ssp_flow(state: PlanarState, t: f64, params: &HlipParams) -> Result<PlanarState> {
    if t < 0.0 {
        return Err(HlipError::NegativeDuration(t));
    }
    state.require_finite()?;
    let lambda = params.lambda()?;
    Ok(FlowCoefficients::from_state(state, lambda).evaluate(t, lambda))
}

/// DSP solution after time `t`: linear drift at constant velocity.
pub fn dsp_flow(state: PlanarState, t: f64) -> Result<PlanarState> {
    if t < 0.0 {
        return Err(HlipError::NegativeDuration(t));
    }
    Ok(PlanarState {
        x: state.x + state.xdot * t,
        xdot: state.xdot,
    })
}

/// SSP → DSP impact. The identity map.
pub fn impact_s2d(state: PlanarState) -> PlanarState {
    state
}

/// DSP → SSP impact: support-leg exchange. Velocity is copied untouched.
pub fn impact_d2s(state: PlanarState, step_length: f64) -> PlanarState {
    PlanarState {
        x: state.x - step_length,
        xdot: state.xdot,
    }
}

/// Orbital energy `ẋ² − λ²x²`, conserved along SSP arcs.
pub fn orbital_energy(state: PlanarState, params: &HlipParams) -> Result<f64> {
    let lambda = params.lambda()?;
    Ok(state.xdot * state.xdot - lambda * lambda * state.x * state.x)
}

/// Step-to-step map from one pre-impact (end of SSP) state to the next.
pub fn step_map(
    preimpact: PlanarState,
    step_length: f64,
    params: &HlipParams,
) -> Result<PlanarState> {
    let dsp_start = impact_s2d(preimpact);
    let dsp_end = dsp_flow(dsp_start, params.t_dsp)?;
    let ssp_start = impact_d2s(dsp_end, step_length);
    ssp_flow(ssp_start, params.t_ssp, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    SspToDsp,
    DspToSsp,
}

/// One logged domain transition with the states on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub kind: Transition,
    /// Time since the start of the step (s).
    pub time: f64,
    pub before: PlanarState,
    pub after: PlanarState,
}

/// Same as [`step_map`] but also returns both transitions of the step.
pub fn step_map_traced(
    preimpact: PlanarState,
    step_length: f64,
    params: &HlipParams,
) -> Result<(PlanarState, [TransitionEvent; 2])> {
    let dsp_start = impact_s2d(preimpact);
    let dsp_end = dsp_flow(dsp_start, params.t_dsp)?;
    let ssp_start = impact_d2s(dsp_end, step_length);
    let next = ssp_flow(ssp_start, params.t_ssp, params)?;
    let events = [
        TransitionEvent {
            kind: Transition::SspToDsp,
            time: 0.0,
            before: preimpact,
            after: dsp_start,
        },
        TransitionEvent {
            kind: Transition::DspToSsp,
            time: params.t_dsp,
            before: dsp_end,
            after: ssp_start,
        },
    ];
    Ok((next, events))
}

/// Samples `(t, x, ẋ)` along an SSP arc at interval `dt`, always including
/// the end point.
pub fn sample_ssp_arc(
    initial: PlanarState,
    duration: f64,
    dt: f64,
    params: &HlipParams,
) -> Result<Vec<(f64, f64, f64)>> {
    if duration < 0.0 {
        return Err(HlipError::NegativeDuration(duration));
    }
    if !(dt > 0.0) {
        return Err(HlipError::InvalidParams(format!(
            "sample interval {dt} must be > 0"
        )));
    }
    let lambda = params.lambda()?;
    let coeffs = FlowCoefficients::from_state(initial, lambda);
    let n = (duration / dt).ceil() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = (i as f64 * dt).min(duration);
        let s = coeffs.evaluate(t, lambda);
        out.push((t, s.x, s.xdot));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HlipParams {
        HlipParams::new(9.81, 1.0, 0.4, 0.1).unwrap()
    }

    #[test]
    fn lambda_values() {
        let l = params().lambda().unwrap();
        assert!((l - 9.81f64.sqrt()).abs() < 1e-15);
        assert!((l - 3.132_091_952_673_165_5).abs() < 1e-12);
        assert_eq!(
            HlipParams::new(9.81, 9.81, 0.4, 0.1)
                .unwrap()
                .lambda()
                .unwrap(),
            1.0
        );
        assert_eq!(
            HlipParams::new(1.0, 4.0, 0.4, 0.1)
                .unwrap()
                .lambda()
                .unwrap(),
            0.5
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(HlipParams::new(-9.81, 1.0, 0.4, 0.1).is_err());
        assert!(HlipParams::new(9.81, 0.0, 0.4, 0.1).is_err());
        assert!(HlipParams::new(9.81, 1.0, 0.4, -0.1).is_err());
        let bad = HlipParams {
            g: 9.81,
            z0: f64::NAN,
            t_ssp: 0.4,
            t_dsp: 0.1,
        };
        assert!(matches!(bad.lambda(), Err(HlipError::InvalidParams(_))));
    }

    #[test]
    fn ssp_flow_equilibrium_and_eigenmode() {
        let p = params();
        let l = p.lambda().unwrap();
        assert_eq!(
            ssp_flow(PlanarState::ORIGIN, 0.3, &p).unwrap(),
            PlanarState::ORIGIN
        );

        let x0 = 0.07;
        let t = 0.35;
        let s = ssp_flow(PlanarState::new(x0, l * x0), t, &p).unwrap();
        let e = (l * t).exp();
        assert!((s.x - x0 * e).abs() < 1e-15);
        assert!((s.xdot - l * x0 * e).abs() < 1e-14);
    }

    #[test]
    fn flows_reject_negative_time() {
        let p = params();
        assert!(matches!(
            ssp_flow(PlanarState::ORIGIN, -0.1, &p),
            Err(HlipError::NegativeDuration(_))
        ));
        assert!(dsp_flow(PlanarState::ORIGIN, -1e-3).is_err());
    }

    #[test]
    fn dsp_flow_examples() {
        let s = dsp_flow(PlanarState::new(0.1, 0.5), 0.1).unwrap();
        assert!((s.x - 0.15).abs() < 1e-15);
        assert_eq!(s.xdot, 0.5);
        assert_eq!(
            dsp_flow(PlanarState::new(0.3, 0.0), 2.0).unwrap(),
            PlanarState::new(0.3, 0.0)
        );
        assert_eq!(
            dsp_flow(PlanarState::new(-0.2, 1.0), 0.0).unwrap(),
            PlanarState::new(-0.2, 1.0)
        );
    }

    #[test]
    fn impact_examples() {
        assert_eq!(
            impact_d2s(PlanarState::new(0.2, 0.5), 0.4),
            PlanarState::new(-0.2, 0.5)
        );
        assert_eq!(
            impact_d2s(PlanarState::new(0.11, -0.3), 0.0),
            PlanarState::new(0.11, -0.3)
        );
        assert_eq!(
            impact_d2s(PlanarState::new(0.0, 1.0), 0.3),
            PlanarState::new(-0.3, 1.0)
        );
        let s = PlanarState::new(0.123, -4.5);
        assert_eq!(impact_s2d(s), s);
    }

    #[test]
    fn orbital_energy_examples() {
        let p = params();
        let l = p.lambda().unwrap();
        assert_eq!(orbital_energy(PlanarState::ORIGIN, &p).unwrap(), 0.0);
        assert!(
            orbital_energy(PlanarState::new(0.3, l * 0.3), &p)
                .unwrap()
                .abs()
                < 1e-15
        );
        let e = orbital_energy(PlanarState::new(0.1, 0.5), &p).unwrap();
        // 0.25 − 9.81 · 0.01
        assert!((e - 0.1519).abs() < 1e-12);
    }

    #[test]
    fn step_map_origin_with_zero_dsp() {
        let p = HlipParams::new(9.81, 1.0, 0.4, 0.0).unwrap();
        assert_eq!(
            step_map(PlanarState::ORIGIN, 0.0, &p).unwrap(),
            PlanarState::ORIGIN
        );
    }

    #[test]
    fn traced_step_lists_both_transitions() {
        let p = params();
        let pre = PlanarState::new(0.05, 0.3);
        let (next, events) = step_map_traced(pre, 0.2, &p).unwrap();
        assert_eq!(next, step_map(pre, 0.2, &p).unwrap());
        assert_eq!(events[0].kind, Transition::SspToDsp);
        assert_eq!(events[0].before, events[0].after);
        assert_eq!(events[1].kind, Transition::DspToSsp);
        assert_eq!(events[1].time, p.t_dsp);
        assert!((events[1].before.x - events[1].after.x - 0.2).abs() < 1e-15);
    }

    #[test]
    fn arc_sampling_includes_end_point() {
        let p = params();
        let samples = sample_ssp_arc(PlanarState::new(-0.1, 0.6), 0.4, 0.03, &p).unwrap();
        let last = samples.last().unwrap();
        assert_eq!(last.0, 0.4);
        let end = ssp_flow(PlanarState::new(-0.1, 0.6), 0.4, &p).unwrap();
        assert!((last.1 - end.x).abs() < 1e-15);
        assert!(sample_ssp_arc(PlanarState::ORIGIN, 0.4, 0.0, &p).is_err());
    }
}
