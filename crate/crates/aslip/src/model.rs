//! Continuous dynamics and transition maps of the actuated SLIP.
//!
//! Angles are measured from the vertical through the foot, positive when the
//! mass is ahead of the foot in the walking (+x) direction:
//!
//! ```text
//!        mass
//!         o
//!        /|
//!     r /q|          mass = foot + r (sin q, cos q)
//!      /  |
//!  ---*---+---- ground
//!    foot
//! ```
//!
//! Each leg is a massless actuator of length `L` in series with a spring of
//! deflection `s`; the foot-to-mass distance is `r = L − s`. The actuator
//! acceleration `L̈` is the control input.

use serde::{Deserialize, Serialize};

use crate::error::{AslipError, Result};
use crate::params::{spring_force, AslipParams};

/// Polar coordinates of one contact leg plus its actuator state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegState {
    pub r: f64,
    pub r_dot: f64,
    pub q: f64,
    pub q_dot: f64,
    pub s: f64,
    pub s_dot: f64,
    pub l: f64,
    pub l_dot: f64,
    /// World x of the foot (m).
    pub foot_x: f64,
}

impl LegState {
    /// World-frame mass position `(x, z)`.
    pub fn mass_position(&self) -> (f64, f64) {
        let (sq, cq) = self.q.sin_cos();
        (self.foot_x + self.r * sq, self.r * cq)
    }

    /// World-frame mass velocity `(ẋ, ż)`.
    pub fn mass_velocity(&self) -> (f64, f64) {
        let (sq, cq) = self.q.sin_cos();
        (
            self.r_dot * sq + self.r * self.q_dot * cq,
            self.r_dot * cq - self.r * self.q_dot * sq,
        )
    }

    pub fn force(&self, params: &AslipParams) -> Result<f64> {
        spring_force(self.l, self.s, self.s_dot, params)
    }

    pub fn holonomic_residual(&self) -> f64 {
        self.l - self.r - self.s
    }

    /// Leg pointing from `foot_x` to a known mass state, with actuator state
    /// `(l, l_dot)`; the deflection follows from `L = r + s`.
    pub fn from_mass(
        foot_x: f64,
        mass: (f64, f64),
        mass_vel: (f64, f64),
        l: f64,
        l_dot: f64,
    ) -> Self {
        let dx = mass.0 - foot_x;
        let z = mass.1;
        let r = dx.hypot(z);
        let q = dx.atan2(z);
        let (sq, cq) = q.sin_cos();
        let r_dot = mass_vel.0 * sq + mass_vel.1 * cq;
        let q_dot = (mass_vel.0 * cq - mass_vel.1 * sq) / r;
        Self {
            r,
            r_dot,
            q,
            q_dot,
            s: l - r,
            s_dot: l_dot - r_dot,
            l,
            l_dot,
            foot_x,
        }
    }
}

/// Single support: one loaded leg, the other swinging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AslipStateSsp {
    pub stance: LegState,
    pub swing_length: f64,
    pub swing_length_dot: f64,
    /// World x where the swing foot is currently aimed (m).
    pub swing_target_x: f64,
}

/// Double support. `leg1` is the leg that was in stance during the preceding
/// single support (the trailing leg when walking forward), `leg2` the one
/// that just touched down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AslipStateDsp {
    pub leg1: LegState,
    pub leg2: LegState,
}

impl AslipStateDsp {
    /// Distance between the mass positions implied by the two legs.
    pub fn loop_closure_error(&self) -> f64 {
        let (x1, z1) = self.leg1.mass_position();
        let (x2, z2) = self.leg2.mass_position();
        (x1 - x2).hypot(z1 - z2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SspAccel {
    pub r_ddot: f64,
    pub q_ddot: f64,
    pub s_ddot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DspAccel {
    pub leg1: SspAccel,
    pub leg2: SspAccel,
}

fn require_positive_r(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(AslipError::Singular(r))
    }
}

/// Single-support accelerations for actuator input `l_ddot` on the stance
/// leg:
///
/// ```text
/// r̈ = F/m − g cos β + r β̇²
/// β̈ = (−2 β̇ ṙ + g sin β) / r
/// s̈ = L̈ − r̈
/// ```
pub fn ssp_dynamics(state: &AslipStateSsp, l_ddot: f64, params: &AslipParams) -> Result<SspAccel> {
    let leg = &state.stance;
    require_positive_r(leg.r)?;
    let f = leg.force(params)?;
    let (sb, cb) = leg.q.sin_cos();
    let r_ddot = f / params.m - params.g * cb + leg.r * leg.q_dot * leg.q_dot;
    let q_ddot = (-2.0 * leg.q_dot * leg.r_dot + params.g * sb) / leg.r;
    Ok(SspAccel {
        r_ddot,
        q_ddot,
        s_ddot: l_ddot - r_ddot,
    })
}

/// Double-support accelerations. Each leg sees gravity, its own spring and
/// the other leg's spring projected onto its polar frame.
pub fn dsp_dynamics(
    state: &AslipStateDsp,
    l_ddot: (f64, f64),
    params: &AslipParams,
) -> Result<DspAccel> {
    let (a, b) = (&state.leg1, &state.leg2);
    require_positive_r(a.r)?;
    require_positive_r(b.r)?;
    let f1 = a.force(params)?;
    let f2 = b.force(params)?;
    let m = params.m;
    let g = params.g;
    let (sd, cd) = (a.q - b.q).sin_cos();

    let r1 = (f1 + f2 * cd) / m - g * a.q.cos() + a.r * a.q_dot * a.q_dot;
    let q1 = (-2.0 * a.q_dot * a.r_dot + g * a.q.sin() - f2 / m * sd) / a.r;
    let r2 = (f2 + f1 * cd) / m - g * b.q.cos() + b.r * b.q_dot * b.q_dot;
    let q2 = (-2.0 * b.q_dot * b.r_dot + g * b.q.sin() + f1 / m * sd) / b.r;
    Ok(DspAccel {
        leg1: SspAccel {
            r_ddot: r1,
            q_ddot: q1,
            s_ddot: l_ddot.0 - r1,
        },
        leg2: SspAccel {
            r_ddot: r2,
            q_ddot: q2,
            s_ddot: l_ddot.1 - r2,
        },
    })
}

/// Swing-foot touchdown. The landing leg's polar coordinates come from the
/// geometry between the mass and `swing_target_x`; its velocities are the
/// stance-frame mass velocity re-expressed in the new leg frame:
///
/// ```text
/// ṙ₂⁺ = ṙ₁ cos(q₁−q₂) − q̇₁ r₁ sin(q₁−q₂)
/// q̇₂⁺ = (q̇₁ r₁ cos(q₁−q₂) + ṙ₁ sin(q₁−q₂)) / r₂
/// ṡ₂⁺ = L̇₂⁻ − ṙ₂⁺
/// ```
///
/// `tol` bounds the mismatch between the foot-to-mass distance and the swing
/// leg length, i.e. how far the swing foot may be from the ground.
pub fn impact_ssp_to_dsp(state: &AslipStateSsp, tol: f64) -> Result<AslipStateDsp> {
    let a = state.stance;
    let (mx, mz) = a.mass_position();
    let dx = mx - state.swing_target_x;
    let r2 = dx.hypot(mz);
    let height = r2 - state.swing_length;
    if height.abs() > tol || mz <= 0.0 {
        return Err(AslipError::GuardNotSatisfied(format!(
            "swing foot {height:.3e} m from the ground at touchdown"
        )));
    }
    let q2 = dx.atan2(mz);
    let (sd, cd) = (a.q - q2).sin_cos();
    let r2_dot = a.r_dot * cd - a.q_dot * a.r * sd;
    let q2_dot = (a.q_dot * a.r * cd + a.r_dot * sd) / r2;
    let leg2 = LegState {
        r: r2,
        r_dot: r2_dot,
        q: q2,
        q_dot: q2_dot,
        s: state.swing_length - r2,
        s_dot: state.swing_length_dot - r2_dot,
        l: state.swing_length,
        l_dot: state.swing_length_dot,
        foot_x: state.swing_target_x,
    };
    Ok(AslipStateDsp { leg1: a, leg2 })
}

/// Lift-off of `leg1`. Requires its spring force to be within `force_tol` of
/// zero; the loaded leg becomes the new stance leg and the unloaded leg's
/// actuator state carries over as the swing leg.
pub fn transition_dsp_to_ssp(
    state: &AslipStateDsp,
    params: &AslipParams,
    force_tol: f64,
) -> Result<AslipStateSsp> {
    let f = state.leg1.force(params)?;
    if f.abs() > force_tol {
        return Err(AslipError::GuardNotSatisfied(format!(
            "trailing leg still carries {f:.3e} N"
        )));
    }
    Ok(AslipStateSsp {
        stance: state.leg2,
        swing_length: state.leg1.l,
        swing_length_dot: state.leg1.l_dot,
        swing_target_x: state.leg1.foot_x,
    })
}
