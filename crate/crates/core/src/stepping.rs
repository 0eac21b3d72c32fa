//! Step-length feedback that stabilizes P1 and P2 orbits.
//!
//! The nominal step length of the target orbit family is evaluated at the
//! measured pre-impact state and corrected by a gain on the pre-impact
//! velocity error. For P1 the velocity error then evolves as
//! `e⁺ = (1 − Kλ·sinh(λT_SSP))·e` and the position error as
//! `(1/σ₁ − K·cosh(λT_SSP))·e`; for P2 the velocity error flips sign each
//! step with the same magnitude factor. `K* = csch(λT_SSP)/λ` zeroes the
//! velocity error in one step and the position error in two.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{HlipError, Result};
use crate::model::{step_map, HlipParams, PlanarState};
use crate::orbits::{
    p1_nominal_step_length, p2_nominal_step_length, sigma1, Orbit, P1Orbit, P2Orbit, StanceLeg,
};

/// Feedback gain on the pre-impact velocity error (s).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SteppingGain(pub f64);

impl SteppingGain {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Open interval `(0, (2/λ)·csch(λT_SSP))` of stabilizing gains.
pub fn gain_range(params: &HlipParams) -> Result<(f64, f64)> {
    Ok((0.0, 2.0 * optimal_gain(params)?.0))
}

/// Deadbeat gain `K* = (1/λ)·csch(λT_SSP)`.
pub fn optimal_gain(params: &HlipParams) -> Result<SteppingGain> {
    params.require_positive_ssp("optimal gain (csch)")?;
    let lambda = params.lambda()?;
    Ok(SteppingGain(
        1.0 / (lambda * (lambda * params.t_ssp).sinh()),
    ))
}

/// One-step multiplier of the pre-impact velocity error, `1 − Kλ·sinh(λT_SSP)`.
pub fn contraction_factor(gain: SteppingGain, params: &HlipParams) -> Result<f64> {
    let lambda = params.lambda()?;
    Ok(1.0 - gain.0 * lambda * (lambda * params.t_ssp).sinh())
}

/// Maps a P1 velocity error to the next pre-impact position error,
/// `1/σ₁ − K·cosh(λT_SSP)`.
pub fn position_factor(gain: SteppingGain, params: &HlipParams) -> Result<f64> {
    let lambda = params.lambda()?;
    Ok(1.0 / sigma1(params)? - gain.0 * (lambda * params.t_ssp).cosh())
}

pub fn p1_step_length(preimpact: PlanarState, orbit: &P1Orbit, gain: SteppingGain) -> Result<f64> {
    let nominal = p1_nominal_step_length(preimpact, &orbit.params)?;
    Ok(nominal + gain.0 * (preimpact.xdot - orbit.preimpact.xdot))
}

/// P2 law. Note the minus sign on the feedback term.
pub fn p2_step_length(
    preimpact: PlanarState,
    orbit: &P2Orbit,
    stance: StanceLeg,
    gain: SteppingGain,
) -> Result<f64> {
    let nominal = p2_nominal_step_length(preimpact, orbit.offset_d2, &orbit.params)?;
    Ok(nominal - gain.0 * (preimpact.xdot - orbit.preimpact(stance).xdot))
}

/// Dispatches to the P1 or P2 law.
pub fn step_length(
    preimpact: PlanarState,
    orbit: &Orbit,
    stance: StanceLeg,
    gain: SteppingGain,
) -> Result<f64> {
    match orbit {
        Orbit::P1(o) => p1_step_length(preimpact, o, gain),
        Orbit::P2(o) => p2_step_length(preimpact, o, stance, gain),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub step: usize,
    pub x: f64,
    pub xdot: f64,
    pub l_cmd: f64,
    /// Pre-impact velocity error against the target of the current stance leg.
    pub ev: f64,
    /// Pre-impact position error against the target of the current stance leg.
    pub ex: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RolloutLog {
    pub records: Vec<RolloutRecord>,
    /// Pre-impact state after the last completed step.
    pub final_state: Option<PlanarState>,
}

impl RolloutLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn velocity_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ev).collect()
    }

    pub fn position_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ex).collect()
    }

    /// Mass displacement of each completed step divided by the step period.
    /// The displacement between consecutive pre-impact instants is
    /// `l + x⁻(next) − x⁻(current)`.
    pub fn step_velocities(&self, params: &HlipParams) -> Vec<f64> {
        let period = params.step_period();
        let mut next_x: Vec<f64> = self.records.iter().skip(1).map(|r| r.x).collect();
        if let Some(last) = self.final_state {
            next_x.push(last.x);
        }
        self.records
            .iter()
            .zip(next_x)
            .map(|(r, nx)| (r.l_cmd + nx - r.x) / period)
            .collect()
    }

    /// Columns `step,x,xdot,l_cmd,ev,ex`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Iterates the closed-loop step-to-step map `n_steps` times starting from a
/// pre-impact state with `initial_stance` on the ground.
pub fn rollout(
    initial: PlanarState,
    orbit: &Orbit,
    gain: SteppingGain,
    n_steps: usize,
    initial_stance: StanceLeg,
) -> Result<RolloutLog> {
    if n_steps == 0 {
        return Err(HlipError::InvalidParams(
            "rollout needs at least one step".into(),
        ));
    }
    let params = *orbit.params();
    let mut log = RolloutLog {
        records: Vec::with_capacity(n_steps),
        final_state: None,
    };
    let mut state = initial;
    let mut stance = initial_stance;
    for step in 0..n_steps {
        if !state.is_finite() {
            return Err(HlipError::Diverged {
                step,
                log: Box::new(log),
            });
        }
        let target = orbit.target(stance);
        let l_cmd = step_length(state, orbit, stance, gain)?;
        let next = match step_map(state, l_cmd, &params) {
            Ok(next) if l_cmd.is_finite() && next.is_finite() => next,
            Ok(_) | Err(HlipError::NonFinite(_)) => {
                return Err(HlipError::Diverged {
                    step,
                    log: Box::new(log),
                })
            }
            Err(e) => return Err(e),
        };
        log.records.push(RolloutRecord {
            step,
            x: state.x,
            xdot: state.xdot,
            l_cmd,
            ev: state.xdot - target.xdot,
            ex: state.x - target.x,
        });
        state = next;
        stance = stance.other();
    }
    log.final_state = Some(state);
    Ok(log)
}
