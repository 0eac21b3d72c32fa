//! Event-driven walking simulation: single support until the swing foot
//! reaches the ground, double support until the trailing leg unloads.
//!
//! Both actuators replay the stepping-in-place gait on a free-running clock
//! (leg B half a stride behind leg A); only the horizontal swing-foot
//! placement reacts to the mass state.

use std::fmt;
use std::io::Write;

use hlip::{HlipParams, Orbit, P1Orbit, P2Orbit, PlanarState, StanceLeg, SteppingGain};
use serde::{Deserialize, Serialize};

use crate::control::{leg_length_tracking, raibert_augmented_command, swing_step_construction};
use crate::error::{AslipError, Result};
use crate::gait::{Gait, LegReference};
use crate::integrate::{integrate_domain_with_breaks, Direction, DomainEnd, Guard, StepOptions};
use crate::model::{
    dsp_dynamics, impact_ssp_to_dsp, ssp_dynamics, transition_dsp_to_ssp, AslipStateDsp,
    AslipStateSsp, LegState,
};
use crate::params::AslipParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegId {
    A,
    B,
}

impl LegId {
    pub fn other(self) -> Self {
        match self {
            LegId::A => LegId::B,
            LegId::B => LegId::A,
        }
    }

    /// Leg A plays the role of the left leg in period-two orbits.
    pub fn hlip_stance(self) -> StanceLeg {
        match self {
            LegId::A => StanceLeg::Left,
            LegId::B => StanceLeg::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerKind {
    HlipP1,
    HlipP2 {
        x_boundary: f64,
    },
    /// P1 stepping plus a derivative term on step-mean velocities.
    Raibert {
        kd: f64,
    },
    /// Constant step length, no feedback.
    Fixed {
        step_length: f64,
    },
}

/// How the massless swing leg meets the ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchdownModel {
    /// The swing length is the vertical drop from mass to foot; the landing
    /// leg takes the geometric mass-to-foot distance at impact.
    Vertical,
    /// The swing length is measured along the leg toward the target.
    AlongLeg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Integrator step (s).
    pub dt: f64,
    /// Event bracket width (s).
    pub event_time_tol: f64,
    /// Lift-off force tolerance (N).
    pub event_force_tol: f64,
    /// Touchdown height tolerance (m).
    pub event_height_tol: f64,
    pub max_steps: usize,
    /// Longest a single domain may last before the run is declared stalled (s).
    pub max_domain_time: f64,
    pub controller: ControllerKind,
    /// Stepping gain (s); `None` selects the deadbeat gain.
    pub gain: Option<f64>,
    /// `(time, desired velocity)` pairs; the latest entry at or before `t`
    /// applies, zero before the first.
    pub velocity_schedule: Vec<(f64, f64)>,
    /// PD gains on actuator length.
    pub tracking_gains: (f64, f64),
    /// Swing placement blend ends at this fraction of the nominal SSP duration.
    pub blend_fraction: f64,
    /// Touchdown is ignored until the swing foot has cleared this height (m).
    pub swing_arm_height: f64,
    pub touchdown: TouchdownModel,
    /// Mass height treated as a fall (m).
    pub min_mass_height: f64,
    /// Keep every n-th integrator step in the trajectory; 0 keeps none.
    pub dump_every: usize,
    /// Steps averaged for converged metrics.
    pub average_steps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            event_time_tol: 1e-9,
            event_force_tol: 1e-6,
            event_height_tol: 1e-9,
            max_steps: 40,
            max_domain_time: 3.0,
            controller: ControllerKind::HlipP1,
            gain: None,
            velocity_schedule: vec![],
            tracking_gains: (400.0, 40.0),
            blend_fraction: 0.8,
            swing_arm_height: 0.005,
            touchdown: TouchdownModel::Vertical,
            min_mass_height: 0.3,
            dump_every: 10,
            average_steps: 6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.event_time_tol > 0.0
            && self.event_force_tol > 0.0
            && self.event_height_tol > 0.0
            && self.max_steps > 0
            && self.max_domain_time > 0.0
            && self.tracking_gains.0 >= 0.0
            && self.tracking_gains.1 >= 0.0
            && self.blend_fraction > 0.0
            && self.swing_arm_height > 0.0
            && self.average_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(AslipError::InvalidParams(
                "simulation step, tolerances, gains and counts must be positive".into(),
            ))
        }
    }

    pub fn desired_velocity(&self, t: f64) -> f64 {
        self.velocity_schedule
            .iter()
            .take_while(|(start, _)| *start <= t)
            .last()
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn constant_velocity(mut self, v: f64) -> Self {
        self.velocity_schedule = vec![(0.0, v)];
        self
    }

    /// Staircase from zero up to `v` in `increments` equal steps spread over
    /// `duration` seconds.
    pub fn ramped_velocity(mut self, v: f64, duration: f64, increments: usize) -> Self {
        let n = increments.max(1);
        self.velocity_schedule = (1..=n)
            .map(|i| {
                (
                    (i - 1) as f64 * duration / n as f64,
                    v * i as f64 / n as f64,
                )
            })
            .collect();
        self
    }
}

/// One step, from the lift-off that starts single support to the next one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub stance_leg: LegId,
    pub t_start: f64,
    pub t_ssp: f64,
    pub t_dsp: f64,
    /// Landing position of the swing foot relative to the stance foot (m).
    pub step_length: f64,
    /// Net horizontal mass displacement over the step divided by its duration.
    pub mean_velocity: f64,
    pub desired_velocity: f64,
    /// Mass state relative to the stance foot at touchdown.
    pub preimpact_x: f64,
    pub preimpact_xdot: f64,
    pub peak_stance_force: f64,
    pub peak_leading_force: f64,
    /// Largest |L − Lᵈ| over both legs during the step.
    pub max_tracking_error: f64,
    /// Swing-foot height at the located touchdown (m).
    pub touchdown_residual: f64,
    /// Trailing-leg force at the located lift-off (N).
    pub liftoff_residual: f64,
    /// Lift-off state ending the step: mass height, vertical velocity and
    /// leg A's clock phase.
    pub end_height: f64,
    pub end_vertical_velocity: f64,
    pub end_xdot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Ssp,
    Dsp,
}

/// Dense trace row. In single support the leg-2 columns describe the swing
/// leg aimed at its current target and `f2` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub domain: Domain,
    pub stance_leg: LegId,
    pub r1: f64,
    pub q1: f64,
    pub s1: f64,
    pub l1: f64,
    pub r2: f64,
    pub q2: f64,
    pub s2: f64,
    pub l2: f64,
    pub x_mass: f64,
    pub z_mass: f64,
    pub xdot_mass: f64,
    pub zdot_mass: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Averages over the last few completed steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkingSummary {
    pub steps: usize,
    pub desired_velocity: f64,
    pub velocity: f64,
    pub t_ssp: f64,
    pub t_dsp: f64,
    pub step_length: f64,
    /// `(velocity − desired) / desired`, or the absolute error when the
    /// desired velocity is zero.
    pub velocity_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkingRun {
    pub steps: Vec<StepRecord>,
    pub trajectory: Vec<TrajectorySample>,
}

impl WalkingRun {
    /// Converged metrics from the last `n` steps (rounded down to an even
    /// count so period-two gaits average over whole periods).
    pub fn summary(&self, n: usize) -> Option<WalkingSummary> {
        let n = (n.min(self.steps.len()) / 2 * 2).max(1);
        if self.steps.len() < n {
            return None;
        }
        let tail = &self.steps[self.steps.len() - n..];
        let mean = |f: fn(&StepRecord) -> f64| tail.iter().map(f).sum::<f64>() / n as f64;
        let duration: f64 = tail.iter().map(|s| s.t_ssp + s.t_dsp).sum();
        let distance: f64 = tail
            .iter()
            .map(|s| s.mean_velocity * (s.t_ssp + s.t_dsp))
            .sum();
        let velocity = distance / duration;
        let desired = tail.last().map_or(0.0, |s| s.desired_velocity);
        let velocity_error = if desired == 0.0 {
            velocity
        } else {
            (velocity - desired) / desired
        };
        Some(WalkingSummary {
            steps: self.steps.len(),
            desired_velocity: desired,
            velocity,
            t_ssp: mean(|s| s.t_ssp),
            t_dsp: mean(|s| s.t_dsp),
            step_length: mean(|s| s.step_length),
            velocity_error,
        })
    }

    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.steps {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.trajectory {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulation error together with everything logged before it.
#[derive(Debug)]
pub struct WalkingFailure {
    pub error: AslipError,
    pub run: WalkingRun,
}

impl fmt::Display for WalkingFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} steps)", self.error, self.run.steps.len())
    }
}

impl std::error::Error for WalkingFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Where a run starts: a single-support state at lift-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// Leg A's stride-clock reading at `t = 0`.
    pub clock_phase: f64,
    pub stance: LegId,
    pub state: AslipStateSsp,
    /// Length of the step that ended at this lift-off.
    pub l_prev: f64,
}

impl InitialCondition {
    /// The gait's own boundary state, standing on leg A with both feet at
    /// the origin.
    pub fn from_gait(gait: &Gait) -> Self {
        let b = &gait.boundary;
        let stance = LegState {
            r: b.mass_height,
            r_dot: b.mass_velocity,
            q: 0.0,
            q_dot: 0.0,
            s: b.stance_length - b.mass_height,
            s_dot: b.stance_rate - b.mass_velocity,
            l: b.stance_length,
            l_dot: b.stance_rate,
            foot_x: 0.0,
        };
        Self {
            clock_phase: b.clock_phase,
            stance: LegId::A,
            state: AslipStateSsp {
                stance,
                swing_length: b.swing_length,
                swing_length_dot: b.swing_rate,
                swing_target_x: 0.0,
            },
            l_prev: 0.0,
        }
    }

    /// Vertical in-place lift-off state with actuators exactly on their
    /// references at leg-A clock reading `clock_phase`.
    pub fn in_place(
        gait: &Gait,
        stance: LegId,
        clock_phase: f64,
        height: f64,
        vertical_velocity: f64,
    ) -> Self {
        let period = gait.step_period();
        let own = |leg: LegId| match leg {
            LegId::A => clock_phase,
            LegId::B => clock_phase + period,
        };
        let st = gait.leg_reference(own(stance));
        let sw = gait.leg_reference(own(stance.other()));
        let leg = LegState {
            r: height,
            r_dot: vertical_velocity,
            q: 0.0,
            q_dot: 0.0,
            s: st.l - height,
            s_dot: st.l_dot - vertical_velocity,
            l: st.l,
            l_dot: st.l_dot,
            foot_x: 0.0,
        };
        Self {
            clock_phase,
            stance,
            state: AslipStateSsp {
                stance: leg,
                swing_length: sw.l,
                swing_length_dot: sw.l_dot,
                swing_target_x: 0.0,
            },
            l_prev: 0.0,
        }
    }
}

/// Everything the vector fields and guards need that stays fixed over one
/// single-support domain.
struct SspContext {
    stance: LegId,
    foot_x: f64,
    t_start: f64,
    l_start: f64,
    v_last: f64,
    v_before: f64,
}

struct Walker<'a> {
    gait: &'a Gait,
    cfg: &'a SimConfig,
    hlip: HlipParams,
    gain: SteppingGain,
    clock_phase: f64,
    blend_end: f64,
}

impl Walker<'_> {
    fn reference(&self, leg: LegId, t: f64) -> LegReference {
        let offset = match leg {
            LegId::A => 0.0,
            LegId::B => self.gait.step_period(),
        };
        self.gait.leg_reference(self.clock_phase + offset + t)
    }

    /// Next time either leg's reference crosses a grid point.
    fn next_knot(&self, t: f64) -> f64 {
        let (a, b) = (self.clock_phase, self.clock_phase + self.gait.step_period());
        // Nudge past a knot we are sitting on so the other leg's is not lost.
        let t = t + 1e-12;
        (self.gait.next_knot(a + t) - a).min(self.gait.next_knot(b + t) - b)
    }

    fn orbit(&self, v: f64) -> Result<Orbit> {
        Ok(match self.cfg.controller {
            ControllerKind::HlipP2 { x_boundary } => {
                Orbit::P2(P2Orbit::new(v, x_boundary, self.hlip)?)
            }
            _ => Orbit::P1(P1Orbit::new(v, self.hlip)?),
        })
    }

    /// Commanded step length for the current mass state.
    fn step_command(&self, t: f64, mass: PlanarState, ctx: &SspContext) -> Result<f64> {
        let stance = ctx.stance.hlip_stance();
        let kd = match self.cfg.controller {
            ControllerKind::Fixed { step_length } => return Ok(step_length),
            ControllerKind::Raibert { kd } => kd,
            _ => 0.0,
        };
        let orbit = self.orbit(self.cfg.desired_velocity(t))?;
        raibert_augmented_command(
            mass,
            &orbit,
            self.gain,
            stance,
            kd,
            ctx.v_last,
            ctx.v_before,
        )
    }

    fn swing_target(&self, t: f64, stance: &LegState, ctx: &SspContext) -> Result<f64> {
        let (x, _) = stance.mass_position();
        let (xd, _) = stance.mass_velocity();
        let cmd = self.step_command(t, PlanarState::new(x - ctx.foot_x, xd), ctx)?;
        Ok(ctx.foot_x + swing_step_construction(t - ctx.t_start, ctx.l_start, cmd, self.blend_end))
    }
}

fn leg_from(y: &[f64], foot_x: f64) -> LegState {
    LegState {
        r: y[0],
        r_dot: y[1],
        q: y[2],
        q_dot: y[3],
        s: y[4],
        s_dot: y[5],
        l: y[6],
        l_dot: y[7],
        foot_x,
    }
}

fn leg_into(leg: &LegState, y: &mut [f64]) {
    y[..8].copy_from_slice(&[
        leg.r, leg.r_dot, leg.q, leg.q_dot, leg.s, leg.s_dot, leg.l, leg.l_dot,
    ]);
}

fn ssp_to_vec(s: &AslipStateSsp) -> [f64; 10] {
    let mut y = [0.0; 10];
    leg_into(&s.stance, &mut y);
    y[8] = s.swing_length;
    y[9] = s.swing_length_dot;
    y
}

fn dsp_to_vec(s: &AslipStateDsp) -> [f64; 16] {
    let mut y = [0.0; 16];
    leg_into(&s.leg1, &mut y[..8]);
    leg_into(&s.leg2, &mut y[8..]);
    y
}

/// Distance from the mass to the swing target minus the swing leg length:
/// the swing foot's clearance measured along the leg.
fn swing_height(stance: &LegState, swing_length: f64, target_x: f64) -> f64 {
    let (x, z) = stance.mass_position();
    (x - target_x).hypot(z) - swing_length
}

pub fn run_walking(gait: &Gait, config: &SimConfig) -> Result<WalkingRun, Box<WalkingFailure>> {
    run_walking_from(gait, config, &InitialCondition::from_gait(gait))
}

pub fn run_walking_from(
    gait: &Gait,
    config: &SimConfig,
    init: &InitialCondition,
) -> Result<WalkingRun, Box<WalkingFailure>> {
    let mut run = WalkingRun::default();
    match walk(gait, config, init, &mut run) {
        Ok(()) => Ok(run),
        Err(error) => Err(Box::new(WalkingFailure { error, run })),
    }
}

fn walk(gait: &Gait, cfg: &SimConfig, init: &InitialCondition, run: &mut WalkingRun) -> Result<()> {
    cfg.validate()?;
    gait.validate()?;
    let params = &gait.params;
    let hlip = gait.hlip_params()?;
    let gain = match cfg.gain {
        Some(k) => SteppingGain(k),
        None => hlip::optimal_gain(&hlip)?,
    };
    let w = Walker {
        gait,
        cfg,
        hlip,
        gain,
        clock_phase: init.clock_phase,
        blend_end: cfg.blend_fraction * hlip.t_ssp,
    };
    let kp_kd = cfg.tracking_gains;
    let mg = params.weight();

    let mut t = 0.0;
    let mut ssp = init.state;
    let mut stance = init.stance;
    let mut l_prev = init.l_prev;
    let mut velocities: Vec<f64> = Vec::new();

    for index in 0..cfg.max_steps {
        let t_start = t;
        let ctx = SspContext {
            stance,
            foot_x: ssp.stance.foot_x,
            t_start,
            l_start: -l_prev,
            v_last: velocities.last().copied().unwrap_or(0.0),
            v_before: velocities.iter().rev().nth(1).copied().unwrap_or(0.0),
        };
        let x_start = ssp.stance.mass_position().0;
        let mut peak_stance = ssp.stance.force(params)?;
        let mut max_track = 0.0_f64;
        let swing = stance.other();
        let breaks = |t: f64| Some(w.next_knot(t));

        // Single support.
        let foot = ctx.foot_x;
        let f_ssp = |t: f64, y: &[f64; 10]| -> Result<[f64; 10]> {
            let st = AslipStateSsp {
                stance: leg_from(y, foot),
                swing_length: y[8],
                swing_length_dot: y[9],
                swing_target_x: f64::NAN,
            };
            let u1 = leg_length_tracking(y[6], y[7], &w.reference(stance, t), kp_kd);
            let u2 = leg_length_tracking(y[8], y[9], &w.reference(swing, t), kp_kd);
            let a = ssp_dynamics(&st, u1, params)?;
            Ok([
                y[1], a.r_ddot, y[3], a.q_ddot, y[5], a.s_ddot, y[7], u1, y[9], u2,
            ])
        };
        let guards = [
            Guard::new(Direction::Falling, |t, y: &[f64; 10]| {
                let leg = leg_from(y, foot);
                match cfg.touchdown {
                    TouchdownModel::Vertical => leg.mass_position().1 - y[8],
                    TouchdownModel::AlongLeg => {
                        let target = w.swing_target(t, &leg, &ctx).unwrap_or(f64::NAN);
                        swing_height(&leg, y[8], target)
                    }
                }
            })
            .armed_above(cfg.swing_arm_height),
            Guard::new(Direction::Falling, |_t, y: &[f64; 10]| {
                leg_from(y, foot).mass_position().1 - cfg.min_mass_height
            }),
            Guard::new(Direction::Falling, |_t, y: &[f64; 10]| {
                leg_from(y, foot).force(params).unwrap_or(f64::NAN)
            }),
        ];
        let opts = StepOptions {
            dt: cfg.dt,
            time_tol: cfg.event_time_tol,
            value_tol: cfg.event_height_tol,
            max_duration: cfg.max_domain_time,
        };
        let mut n_obs = 0usize;
        let end: DomainEnd<10> = integrate_domain_with_breaks(
            t,
            ssp_to_vec(&ssp),
            &f_ssp,
            &guards,
            &opts,
            &breaks,
            &mut |t, y| {
                let leg = leg_from(y, foot);
                if let Ok(f) = leg.force(params) {
                    peak_stance = peak_stance.max(f);
                }
                let e1 = (y[6] - w.reference(stance, t).l).abs();
                let e2 = (y[8] - w.reference(swing, t).l).abs();
                max_track = max_track.max(e1).max(e2);
                n_obs += 1;
                if cfg.dump_every > 0 && n_obs % cfg.dump_every == 0 {
                    let target = w.swing_target(t, &leg, &ctx).unwrap_or(f64::NAN);
                    run.trajectory
                        .push(ssp_sample(t, stance, &leg, y[8], target, params));
                }
            },
        )?;
        match end.guard {
            0 => {}
            1 => return Err(fell(end.t, "mass height below limit")),
            _ => return Err(fell(end.t, "stance leg unloaded in single support")),
        }
        let stance_leg = leg_from(&end.y, foot);
        let target = w.swing_target(end.t, &stance_leg, &ctx)?;
        let (touchdown_residual, landing_length) = match cfg.touchdown {
            TouchdownModel::Vertical => {
                let (x, z) = stance_leg.mass_position();
                (z - end.y[8], (x - target).hypot(z))
            }
            TouchdownModel::AlongLeg => (swing_height(&stance_leg, end.y[8], target), end.y[8]),
        };
        let pre = AslipStateSsp {
            stance: stance_leg,
            swing_length: landing_length,
            swing_length_dot: end.y[9],
            swing_target_x: target,
        };
        let dsp = impact_ssp_to_dsp(&pre, cfg.event_height_tol.max(1e-9) * 10.0)?;
        let (mx, _) = stance_leg.mass_position();
        let (mxd, _) = stance_leg.mass_velocity();
        let t_touchdown = end.t;
        let step_length = target - foot;
        if cfg.dump_every > 0 {
            run.trajectory
                .push(dsp_sample(t_touchdown, stance, &dsp, params));
        }

        // Double support.
        let lead_foot = target;
        let f_dsp = |t: f64, y: &[f64; 16]| -> Result<[f64; 16]> {
            let st = AslipStateDsp {
                leg1: leg_from(&y[..8], foot),
                leg2: leg_from(&y[8..], lead_foot),
            };
            let u1 = leg_length_tracking(y[6], y[7], &w.reference(stance, t), kp_kd);
            let u2 = leg_length_tracking(y[14], y[15], &w.reference(swing, t), kp_kd);
            let a = dsp_dynamics(&st, (u1, u2), params)?;
            Ok([
                y[1],
                a.leg1.r_ddot,
                y[3],
                a.leg1.q_ddot,
                y[5],
                a.leg1.s_ddot,
                y[7],
                u1,
                y[9],
                a.leg2.r_ddot,
                y[11],
                a.leg2.q_ddot,
                y[13],
                a.leg2.s_ddot,
                y[15],
                u2,
            ])
        };
        let dsp_guards = [
            Guard::new(Direction::Falling, |_t, y: &[f64; 16]| {
                leg_from(&y[..8], foot).force(params).unwrap_or(f64::NAN)
            }),
            Guard::new(Direction::Falling, |_t, y: &[f64; 16]| {
                leg_from(&y[8..], lead_foot)
                    .force(params)
                    .unwrap_or(f64::NAN)
            })
            .armed_above(0.05 * mg),
            Guard::new(Direction::Falling, |_t, y: &[f64; 16]| {
                leg_from(&y[..8], foot).mass_position().1 - cfg.min_mass_height
            }),
        ];
        let dsp_opts = StepOptions {
            value_tol: cfg.event_force_tol,
            ..opts
        };
        if dsp.leg1.force(params)? <= 0.0 {
            return Err(fell(t_touchdown, "trailing leg unloaded before touchdown"));
        }
        let mut peak_lead = 0.0_f64;
        let end: DomainEnd<16> = integrate_domain_with_breaks(
            t_touchdown,
            dsp_to_vec(&dsp),
            &f_dsp,
            &dsp_guards,
            &dsp_opts,
            &breaks,
            &mut |t, y| {
                let st = AslipStateDsp {
                    leg1: leg_from(&y[..8], foot),
                    leg2: leg_from(&y[8..], lead_foot),
                };
                if let (Ok(f1), Ok(f2)) = (st.leg1.force(params), st.leg2.force(params)) {
                    peak_stance = peak_stance.max(f1);
                    peak_lead = peak_lead.max(f2);
                }
                let e1 = (y[6] - w.reference(stance, t).l).abs();
                let e2 = (y[14] - w.reference(swing, t).l).abs();
                max_track = max_track.max(e1).max(e2);
                n_obs += 1;
                if cfg.dump_every > 0 && n_obs % cfg.dump_every == 0 {
                    run.trajectory.push(dsp_sample(t, stance, &st, params));
                }
            },
        )?;
        match end.guard {
            0 => {}
            1 => return Err(fell(end.t, "leading leg unloaded in double support")),
            _ => return Err(fell(end.t, "mass height below limit")),
        }
        let dsp_end = AslipStateDsp {
            leg1: leg_from(&end.y[..8], foot),
            leg2: leg_from(&end.y[8..], lead_foot),
        };
        let liftoff_residual = dsp_end.leg1.force(params)?;
        ssp = transition_dsp_to_ssp(&dsp_end, params, cfg.event_force_tol)?;
        let (x_end, z_end) = ssp.stance.mass_position();
        let (xd_end, zd_end) = ssp.stance.mass_velocity();
        t = end.t;
        let duration = t - t_start;
        let mean_velocity = (x_end - x_start) / duration;
        velocities.push(mean_velocity);
        run.steps.push(StepRecord {
            index,
            stance_leg: stance,
            t_start,
            t_ssp: t_touchdown - t_start,
            t_dsp: t - t_touchdown,
            step_length,
            mean_velocity,
            desired_velocity: cfg.desired_velocity(t_start),
            preimpact_x: mx - foot,
            preimpact_xdot: mxd,
            peak_stance_force: peak_stance,
            peak_leading_force: peak_lead,
            max_tracking_error: max_track,
            touchdown_residual,
            liftoff_residual,
            end_height: z_end,
            end_vertical_velocity: zd_end,
            end_xdot: xd_end,
        });
        if cfg.dump_every > 0 {
            run.trajectory.push(dsp_sample(t, stance, &dsp_end, params));
        }
        stance = swing;
        l_prev = step_length;
    }
    Ok(())
}

fn fell(t: f64, reason: &str) -> AslipError {
    AslipError::Fell {
        t,
        reason: reason.to_string(),
    }
}

fn ssp_sample(
    t: f64,
    stance: LegId,
    leg: &LegState,
    swing_length: f64,
    target: f64,
    p: &AslipParams,
) -> TrajectorySample {
    let (x, z) = leg.mass_position();
    let (xd, zd) = leg.mass_velocity();
    let dx = x - target;
    TrajectorySample {
        t,
        domain: Domain::Ssp,
        stance_leg: stance,
        r1: leg.r,
        q1: leg.q,
        s1: leg.s,
        l1: leg.l,
        r2: dx.hypot(z),
        q2: dx.atan2(z),
        s2: 0.0,
        l2: swing_length,
        x_mass: x,
        z_mass: z,
        xdot_mass: xd,
        zdot_mass: zd,
        f1: leg.force(p).unwrap_or(f64::NAN),
        f2: 0.0,
    }
}

fn dsp_sample(t: f64, stance: LegId, s: &AslipStateDsp, p: &AslipParams) -> TrajectorySample {
    let (x, z) = s.leg1.mass_position();
    let (xd, zd) = s.leg1.mass_velocity();
    TrajectorySample {
        t,
        domain: Domain::Dsp,
        stance_leg: stance,
        r1: s.leg1.r,
        q1: s.leg1.q,
        s1: s.leg1.s,
        l1: s.leg1.l,
        r2: s.leg2.r,
        q2: s.leg2.q,
        s2: s.leg2.s,
        l2: s.leg2.l,
        x_mass: x,
        z_mass: z,
        xdot_mass: xd,
        zdot_mass: zd,
        f1: s.leg1.force(p).unwrap_or(f64::NAN),
        f2: s.leg2.force(p).unwrap_or(f64::NAN),
    }
}
