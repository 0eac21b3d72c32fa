//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Reference values are recomputed here independently of
//! the library wherever a closed form or a direct formulation exists.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use aslip::gait::{Gait, GaitSegment};
use aslip::gaitopt::{optimize_stepping_in_place, validate_gait, GaitOptOptions};
use aslip::sim::{run_walking, ControllerKind, LegId};
use aslip::{
    dsp_dynamics, impact_ssp_to_dsp, ssp_dynamics, AslipParams, AslipStateDsp, AslipStateSsp,
    LegState,
};
use hlip::{
    optimal_gain, rollout, ssp_flow, step_map, verify_orbit, HlipParams, Orbit, P1Orbit, P2Orbit,
    PlanarState, PlaneSpec, StanceLeg, SteppingGain,
};
use hlip_cli::commands::{self, in_place_start};
use hlip_cli::config::{parse_values, Config, Schedule, RANDOM_XDOT_RANGE, RANDOM_X_RANGE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn params() -> HlipParams {
    HlipParams::new(9.81, 1.0, 0.4, 0.1).unwrap()
}

fn lambda(p: &HlipParams) -> f64 {
    (p.g / p.z0).sqrt()
}

fn random_state(rng: &mut ChaCha8Rng) -> PlanarState {
    PlanarState::new(
        rng.gen_range(RANDOM_X_RANGE.0..=RANDOM_X_RANGE.1),
        rng.gen_range(RANDOM_XDOT_RANGE.0..=RANDOM_XDOT_RANGE.1),
    )
}

// ------------------------------------------------------------------ 1

fn deadbeat() -> Check {
    let p = params();
    let k = optimal_gain(&p).map_err(|e| e.to_string())?;
    let targets = [
        Orbit::P1(P1Orbit::new(0.3, p).unwrap()),
        Orbit::P2(P2Orbit::new(0.3, -0.05, p).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut worst_v, mut worst_x) = (0.0_f64, 0.0_f64);
    for orbit in &targets {
        for _ in 0..1000 {
            let log = rollout(random_state(&mut rng), orbit, k, 4, StanceLeg::Left)
                .map_err(|e| e.to_string())?;
            worst_v = worst_v
                .max(log.records[1].ev.abs())
                .max(log.records[2].ev.abs());
            worst_x = worst_x
                .max(log.records[2].ex.abs())
                .max(log.records[3].ex.abs());
        }
    }
    let elapsed = start.elapsed();
    ensure!(worst_v <= 1e-9, "velocity error after one step {worst_v:e}");
    ensure!(
        worst_x <= 1e-9,
        "position error after two steps {worst_x:e}"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "max |e_v| {worst_v:.1e}, max |e_x| {worst_x:.1e}, {elapsed:.1?}"
    ))
}

// ------------------------------------------------------------------ 2

/// Per-step error ratios written out from the pendulum solution.
fn closed_form_ratios(k: f64, p: &HlipParams) -> (f64, f64) {
    let l = lambda(p);
    let sigma1 = l / (0.5 * p.t_ssp * l).tanh();
    (
        1.0 - k * l * (p.t_ssp * l).sinh(),
        1.0 / sigma1 - k * (p.t_ssp * l).cosh(),
    )
}

fn k_max(p: &HlipParams) -> f64 {
    let l = lambda(p);
    2.0 / l / (p.t_ssp * l).sinh()
}

fn contraction_law() -> Check {
    let p = params();
    let orbit = Orbit::P1(P1Orbit::new(0.35, p).unwrap());
    let target = orbit.target(StanceLeg::Left);
    let mut worst = 0.0_f64;
    for i in 0..20 {
        let k = k_max(&p) * (i as f64 + 0.5) / 20.0;
        let (c, pf) = closed_form_ratios(k, &p);
        let start = PlanarState::new(0.2, -0.4);
        let log = rollout(start, &orbit, SteppingGain(k), 2, StanceLeg::Left)
            .map_err(|e| e.to_string())?;
        let e0 = start.xdot - target.xdot;
        let next = &log.records[1];
        worst = worst
            .max((next.ev / e0 - c).abs())
            .max((next.ex / e0 - pf).abs());
    }
    ensure!(worst <= 1e-10, "ratio mismatch {worst:e}");
    Ok(format!("20 gains, max ratio mismatch {worst:.1e}"))
}

// ------------------------------------------------------------------ 3

fn gain_boundaries() -> Check {
    let p = params();
    let orbit = Orbit::P1(P1Orbit::new(0.2, p).unwrap());
    // Largest per-step |ratio| while the error is still well above rounding.
    let ratio = |k: f64| -> Result<f64, String> {
        let log = rollout(
            PlanarState::new(-0.2, 0.8),
            &orbit,
            SteppingGain(k),
            6,
            StanceLeg::Left,
        )
        .map_err(|e| e.to_string())?;
        let ev = log.velocity_errors();
        Ok(ev
            .windows(2)
            .filter(|w| w[0].abs() > 1e-6)
            .map(|w| (w[1] / w[0]).abs())
            .fold(0.0, f64::max))
    };
    for k in [0.0, k_max(&p)] {
        let r = ratio(k)?;
        ensure!((r - 1.0).abs() <= 1e-10, "K = {k}: |ratio| {r}");
    }
    let mut inside = 0.0_f64;
    for i in 1..20 {
        inside = inside.max(ratio(k_max(&p) * i as f64 / 20.0)?);
    }
    ensure!(inside < 1.0, "interior |ratio| {inside}");
    Ok(format!(
        "boundary |ratio| = 1, interior max |ratio| {inside:.3}"
    ))
}

// ------------------------------------------------------------------ 4

fn orbit_characterization() -> Check {
    let p = params();
    let l = lambda(&p);
    let mut closure = 0.0_f64;
    for v in [-0.5, 0.0, 0.2, 0.6] {
        let o = P1Orbit::new(v, p).unwrap();
        let next = step_map(o.preimpact, o.step_length, &p).map_err(|e| e.to_string())?;
        closure = closure.max(next.max_abs_diff(&o.preimpact));
        let o2 = P2Orbit::new(v, -0.05, p).unwrap();
        let a = step_map(
            o2.preimpact(StanceLeg::Left),
            o2.step_length(StanceLeg::Left),
            &p,
        )
        .unwrap();
        closure = closure.max(a.max_abs_diff(&o2.preimpact(StanceLeg::Right)));
        let b = step_map(a, o2.step_length(StanceLeg::Right), &p).unwrap();
        closure = closure.max(b.max_abs_diff(&o2.preimpact(StanceLeg::Left)));
    }
    ensure!(closure <= 1e-10, "closure {closure:e}");

    // Single support carries ẋ = −σ₂x + d onto ẋ = σ₂x + d.
    let sigma2 = l * (0.5 * p.t_ssp * l).tanh();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut line = 0.0_f64;
    for _ in 0..100 {
        let x = rng.gen_range(-0.5..0.5);
        let d = rng.gen_range(-1.0..1.0);
        let end = ssp_flow(PlanarState::new(x, -sigma2 * x + d), p.t_ssp, &p)
            .map_err(|e| e.to_string())?;
        line = line.max((end.xdot - sigma2 * end.x - d).abs());
    }
    ensure!(line <= 1e-9, "line-to-line residual {line:e}");

    // Net velocity as displacement over the two-step period.
    let mut vel = 0.0_f64;
    for v in [-0.4, -0.1, 0.0, 0.25, 0.6] {
        for i in 0..20 {
            let xb = -0.3 + 0.03 * i as f64;
            let o = P2Orbit::new(v, xb, p).map_err(|e| e.to_string())?;
            let travel = o.step_length(StanceLeg::Left) + o.step_length(StanceLeg::Right);
            let measured = travel / (2.0 * (p.t_ssp + p.t_dsp));
            let report = verify_orbit(&Orbit::P2(o)).map_err(|e| e.to_string())?;
            vel = vel
                .max((measured - v).abs())
                .max((report.measured_net_velocity - v).abs());
            closure = closure.max(report.closure_residual);
        }
    }
    ensure!(closure <= 1e-10, "closure {closure:e}");
    ensure!(vel <= 1e-9, "P2 net velocity {vel:e}");
    Ok(format!(
        "closure {closure:.1e}, line residual {line:.1e}, velocity {vel:.1e}"
    ))
}

// ------------------------------------------------------------------ 5

fn rk4(state: PlanarState, l: f64, t_end: f64, h: f64) -> PlanarState {
    let f = |x: f64, v: f64| (v, l * l * x);
    let (mut x, mut v) = (state.x, state.xdot);
    for _ in 0..(t_end / h).round() as usize {
        let (k1x, k1v) = f(x, v);
        let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
        let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
        let (k4x, k4v) = f(x + h * k3x, v + h * k3v);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    PlanarState::new(x, v)
}

fn closed_form_flow() -> Check {
    let p = HlipParams::new(9.81, 1.0, 1.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..3 {
        let s = PlanarState::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.5..0.5));
        let closed = ssp_flow(s, 1.0, &p).map_err(|e| e.to_string())?;
        worst = worst.max(closed.max_abs_diff(&rk4(s, lambda(&p), 1.0, 1e-6)));
    }
    ensure!(worst <= 1e-8, "difference {worst:e}");
    Ok(format!("1 s horizon, max difference {worst:.1e}"))
}

// ------------------------------------------------------------------ 6

const AGREE: f64 = 1e-12;

/// `(r, ṙ, q, q̇)` of the mass at `(x, z)` moving at `(vx, vz)` over `foot`.
fn polar(foot: f64, x: f64, z: f64, vx: f64, vz: f64) -> (f64, f64, f64, f64) {
    let (dx, dz) = (x - foot, z);
    let r = (dx * dx + dz * dz).sqrt();
    let (ux, uz) = (dx / r, dz / r);
    let (tx, tz) = (uz, -ux);
    (r, vx * ux + vz * uz, dx.atan2(dz), (vx * tx + vz * tz) / r)
}

fn polar_accel(foot: f64, x: f64, z: f64, vx: f64, vz: f64, ax: f64, az: f64) -> (f64, f64) {
    let (r, r_dot, _, q_dot) = polar(foot, x, z, vx, vz);
    let (ux, uz) = ((x - foot) / r, z / r);
    let (tx, tz) = (uz, -ux);
    (
        ax * ux + az * uz + r * q_dot * q_dot,
        (ax * tx + az * tz - 2.0 * r_dot * q_dot) / r,
    )
}

fn spring(p: &AslipParams, l: f64, s: f64, s_dot: f64) -> f64 {
    let poly = |c: &[f64]| c.iter().rev().fold(0.0, |acc, c| acc * l + c);
    poly(&p.spring_stiffness_coeffs) * s + poly(&p.spring_damping_coeffs) * s_dot
}

struct Sample {
    x: f64,
    z: f64,
    vx: f64,
    vz: f64,
    feet: [f64; 2],
    l: [f64; 2],
    l_dot: [f64; 2],
    u: [f64; 2],
}

fn sample(rng: &mut ChaCha8Rng) -> Sample {
    Sample {
        x: rng.gen_range(-0.5..0.5),
        z: rng.gen_range(0.6..0.95),
        vx: rng.gen_range(-1.5..1.5),
        vz: rng.gen_range(-0.8..0.8),
        feet: [rng.gen_range(-0.8..0.0), rng.gen_range(0.0..0.8)],
        l: [rng.gen_range(0.55..0.98), rng.gen_range(0.55..0.98)],
        l_dot: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        u: [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)],
    }
}

fn leg(s: &Sample, i: usize) -> LegState {
    let (r, r_dot, q, q_dot) = polar(s.feet[i], s.x, s.z, s.vx, s.vz);
    LegState {
        r,
        r_dot,
        q,
        q_dot,
        s: s.l[i] - r,
        s_dot: s.l_dot[i] - r_dot,
        l: s.l[i],
        l_dot: s.l_dot[i],
        foot_x: s.feet[i],
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn aslip_dynamics() -> Check {
    let p = AslipParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut continuity) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let s = sample(&mut rng);
        // Single support: Newton's law in Cartesian form, projected onto the leg.
        let stance = leg(&s, 0);
        let f = spring(&p, stance.l, stance.s, stance.s_dot);
        let (ax, az) = (
            f * (s.x - s.feet[0]) / stance.r / p.m,
            f * s.z / stance.r / p.m - p.g,
        );
        let (r_dd, q_dd) = polar_accel(s.feet[0], s.x, s.z, s.vx, s.vz, ax, az);
        let state = AslipStateSsp {
            stance,
            swing_length: s.l[1],
            swing_length_dot: s.l_dot[1],
            swing_target_x: s.feet[1],
        };
        let a = ssp_dynamics(&state, s.u[0], &p).map_err(|e| e.to_string())?;
        worst = worst
            .max(rel(a.r_ddot, r_dd))
            .max(rel(a.q_ddot, q_dd))
            .max(rel(a.s_ddot, s.u[0] - r_dd));

        // Double support.
        let legs = [leg(&s, 0), leg(&s, 1)];
        let (mut ax, mut az) = (0.0, -p.g);
        for (i, lg) in legs.iter().enumerate() {
            let f = spring(&p, lg.l, lg.s, lg.s_dot);
            ax += f * (s.x - s.feet[i]) / lg.r / p.m;
            az += f * s.z / lg.r / p.m;
        }
        let a = dsp_dynamics(
            &AslipStateDsp {
                leg1: legs[0],
                leg2: legs[1],
            },
            (s.u[0], s.u[1]),
            &p,
        )
        .map_err(|e| e.to_string())?;
        for (i, got) in [a.leg1, a.leg2].iter().enumerate() {
            let (r_dd, q_dd) = polar_accel(s.feet[i], s.x, s.z, s.vx, s.vz, ax, az);
            worst = worst
                .max(rel(got.r_ddot, r_dd))
                .max(rel(got.q_ddot, q_dd))
                .max(rel(got.s_ddot, s.u[i] - r_dd));
        }

        // Touchdown of the swing foot exactly at its target.
        let (r2, r2_dot, q2, q2_dot) = polar(s.feet[1], s.x, s.z, s.vx, s.vz);
        let pre = AslipStateSsp {
            stance,
            swing_length: r2,
            swing_length_dot: s.l_dot[1],
            swing_target_x: s.feet[1],
        };
        let post = impact_ssp_to_dsp(&pre, 1e-12).map_err(|e| e.to_string())?;
        let land = post.leg2;
        worst = worst
            .max(rel(land.r, r2))
            .max(rel(land.q, q2))
            .max(rel(land.r_dot, r2_dot))
            .max(rel(land.q_dot, q2_dot))
            .max(rel(land.s_dot, s.l_dot[1] - r2_dot));
        ensure!(post.leg1 == stance, "impact changed the stance leg");
        let (vx0, vz0) = stance.mass_velocity();
        let (vx1, vz1) = land.mass_velocity();
        continuity = continuity.max((vx1 - vx0).abs()).max((vz1 - vz0).abs());
        continuity = continuity.max((vx1 - s.vx).abs()).max((vz1 - s.vz).abs());
    }
    ensure!(worst <= AGREE, "oracle disagreement {worst:e}");
    ensure!(continuity <= 1e-10, "mass velocity jump {continuity:e}");
    Ok(format!(
        "1000 states, disagreement {worst:.1e}, velocity jump {continuity:.1e}"
    ))
}

// ------------------------------------------------------------------ 7

static GAIT: OnceLock<Result<(Gait, Duration), String>> = OnceLock::new();

fn gait() -> Result<&'static Gait, String> {
    let r = GAIT.get_or_init(|| {
        let start = Instant::now();
        optimize_stepping_in_place(&AslipParams::default(), &GaitOptOptions::default())
            .map(|g| (g, start.elapsed()))
            .map_err(|e| e.to_string())
    });
    r.as_ref().map(|(g, _)| g).map_err(Clone::clone)
}

/// Largest trapezoidal defect of one segment of the in-place gait, with the
/// vertical dynamics written out directly.
fn segment_defect(p: &AslipParams, seg: &GaitSegment, double: bool) -> f64 {
    let rates = |y: &[f64; 6], u: (f64, f64)| {
        let force = |l: f64, ld: f64| spring(p, l, l - y[0], ld - y[1]);
        let mut a = force(y[2], y[3]) / p.m - p.g;
        if double {
            a += force(y[4], y[5]) / p.m;
        }
        [y[1], a, y[3], u.0, y[5], u.1]
    };
    let node = |k: usize| {
        [
            seg.mass_height[k],
            seg.mass_velocity[k],
            seg.stance.length[k],
            seg.stance.rate[k],
            seg.swing.length[k],
            seg.swing.rate[k],
        ]
    };
    let n = seg.samples() - 1;
    let h = seg.duration / n as f64;
    let mut worst = 0.0_f64;
    for k in 0..n {
        let (ya, yb) = (node(k), node(k + 1));
        let fa = rates(&ya, (seg.stance.accel[k], seg.swing.accel[k]));
        let fb = rates(&yb, (seg.stance.accel[k + 1], seg.swing.accel[k + 1]));
        for i in 0..6 {
            worst = worst.max((yb[i] - ya[i] - 0.5 * h * (fa[i] + fb[i])).abs());
        }
    }
    worst
}

fn gait_optimization() -> Check {
    let g = gait()?;
    let elapsed = GAIT
        .get()
        .and_then(|r| r.as_ref().ok())
        .map(|r| r.1)
        .unwrap_or_default();
    let defect =
        segment_defect(&g.params, &g.ssp, false).max(segment_defect(&g.params, &g.dsp, true));
    let m = &g.metadata;
    ensure!(defect <= 1e-6, "collocation defect {defect:e}");
    ensure!(
        m.net_velocity.abs() <= 1e-3,
        "net velocity {}",
        m.net_velocity
    );
    ensure!(
        m.periodicity_residual <= 1e-4,
        "periodicity {:e}",
        m.periodicity_residual
    );
    let v = validate_gait(g, &GaitOptOptions::default().sim);
    ensure!(!v.diverged, "replay failed: {:?}", v.failure);
    ensure!(
        v.steps.len() >= 10,
        "replay covered {} steps",
        v.steps.len()
    );
    ensure!(v.max_drift <= 1e-3, "replay drift {:e}", v.max_drift);
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "defect {defect:.1e}, periodicity {:.1e}, drift {:.1e}/step over {} steps, {elapsed:.1?}",
        m.periodicity_residual,
        v.max_drift,
        v.steps.len()
    ))
}

// ------------------------------------------------------------------ 8

fn sweep() -> Check {
    let g = gait()?;
    let mut cfg = Config::default();
    cfg.sweep.velocities = (1..=9).map(|i| i as f64 / 10.0).collect();
    let r = commands::sweep(g, &cfg).map_err(|e| e.to_string())?;
    ensure!(r.failed.is_empty(), "failed at {:?}", r.failed);
    ensure!(
        r.all_within_10_percent,
        "max |error| {:.2}%",
        100.0 * r.max_abs_velocity_error
    );
    ensure!(r.t_ssp_non_increasing, "T_SSP not non-increasing");
    ensure!(
        r.step_length_non_decreasing,
        "step length not non-decreasing"
    );
    Ok(format!(
        "9 velocities, max |error| {:.2}%, trends hold",
        100.0 * r.max_abs_velocity_error
    ))
}

// ------------------------------------------------------------------ 9

fn p2_walking() -> Check {
    let g = gait()?;
    let mut cfg = Config::default();
    cfg.walking.controller = ControllerKind::HlipP2 { x_boundary: -0.05 };
    cfg.walking.schedule = Schedule::Step { at: 1.0 };
    cfg.walking.steps = 40;
    let sim = cfg.walking.sim_config(cfg.walking.controller, 0.3);
    let run = run_walking(g, &sim).map_err(|f| f.to_string())?;
    let s = run.summary(sim.average_steps).ok_or("no summary")?;
    ensure!(
        s.velocity_error.abs() <= 0.1,
        "velocity error {:.2}%",
        100.0 * s.velocity_error
    );
    // Pre-impact positions straddle the one-step orbit's, alternating by stance leg.
    let hp = g.hlip_params().map_err(|e| e.to_string())?;
    let p1 = P1Orbit::new(0.3, hp).unwrap().preimpact.x;
    for st in &run.steps[run.steps.len() - 6..] {
        let ok = match st.stance_leg {
            LegId::A => st.preimpact_x < p1,
            LegId::B => st.preimpact_x > p1,
        };
        ensure!(
            ok,
            "step {} does not alternate: x = {}",
            st.index,
            st.preimpact_x
        );
    }
    Ok(format!(
        "velocity error {:+.2}%, boundaries alternate",
        100.0 * s.velocity_error
    ))
}

// ----------------------------------------------------------------- 10

fn raibert() -> Check {
    let g = gait()?;
    let cfg = Config::default();
    let kds = parse_values("-0.04..0.04")?;
    let rows = commands::kd_comparison(g, &cfg, &kds).map_err(|e| e.to_string())?;
    ensure!(
        rows.len() == kds.len(),
        "{} of {} gains reported",
        rows.len(),
        kds.len()
    );
    for (row, _) in &rows {
        ensure!(
            row.diverged || row.velocity_error.is_some(),
            "kd {} has neither metrics nor a failure",
            row.kd
        );
    }
    let w = &cfg.walking;
    let plain = run_walking(g, &w.sim_config(ControllerKind::HlipP1, w.velocity))
        .map_err(|f| f.to_string())?;
    let zero = rows
        .iter()
        .find(|(r, _)| r.kd == 0.0)
        .ok_or("kd = 0 missing")?;
    ensure!(
        zero.1.run == plain,
        "kd = 0 differs from the pure stepping run"
    );
    let diverged = rows.iter().filter(|(r, _)| r.diverged).count();
    Ok(format!(
        "{} gains, {diverged} diverged, kd = 0 identical to pure stepping",
        rows.len()
    ))
}

// ----------------------------------------------------------------- 11

fn composition() -> Check {
    let p = params();
    let commands = [(0.2, 0.0), (0.0, 0.2), (-0.25, -0.25), (0.25, -0.15)];
    let planes = |v: f64, xb: f64| [PlaneSpec::p1(v), PlaneSpec::p2(v, xb)];
    let mut cases = 0;
    let mut worst = 0.0_f64;
    for (vx, vy) in commands {
        for sag in planes(vx, -0.05) {
            for cor in planes(vy, -0.1) {
                let mut cfg = Config {
                    hlip: p,
                    ..Config::default()
                };
                cfg.compose3d.sagittal = sag;
                cfg.compose3d.coronal = cor;
                cfg.compose3d.steps = 8;
                let r = commands::compose3d(&cfg).map_err(|e| e.to_string())?;
                for (plane, v) in [(&r.sagittal, vx), (&r.coronal, vy)] {
                    let got = plane.converged_velocity.ok_or("no converged velocity")?;
                    let settle = plane.settling_step.ok_or("never settled")?;
                    ensure!(
                        (got - v).abs() <= 1e-6,
                        "{} ({vx}, {vy}): velocity {got} vs {v}",
                        r.category
                    );
                    ensure!(
                        settle <= 3,
                        "{} ({vx}, {vy}): settled at step {settle}",
                        r.category
                    );
                    ensure!(
                        plane.initial == in_place_start(&plane.spec, p).unwrap(),
                        "not started in place"
                    );
                    worst = worst.max((got - v).abs());
                }
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} category/command pairs, max velocity error {worst:.1e}, settled within 3 steps"
    ))
}

// ----------------------------------------------------------------- 12

fn run_cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_hlip"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    Ok(())
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|x| x == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let root = std::env::temp_dir().join(format!("hlip-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).map_err(|e| e.to_string())?;
    let gait_path = root.join("gait.json");
    gait()?.save(&gait_path).map_err(|e| e.to_string())?;
    let gait_arg = gait_path.to_string_lossy().into_owned();
    let scenarios: Vec<Vec<&str>> = vec![
        vec![
            "--seed",
            "7",
            "stabilize",
            "--states",
            "20",
            "--gain-grid",
            "0.5,1,1.5",
        ],
        vec!["orbit", "--kind", "p2", "--v", "0.3"],
        vec![
            "compose3d",
            "--sagittal",
            "p2:-0.25:-0.05",
            "--coronal",
            "p1:0.2",
        ],
        vec!["aslip-run", "--gait", &gait_arg, "--steps", "20"],
        vec![
            "aslip-run",
            "--gait",
            &gait_arg,
            "--steps",
            "15",
            "--kd=-0.02,0,0.02",
        ],
        vec![
            "sweep",
            "--gait",
            &gait_arg,
            "--velocities",
            "0.2,0.6",
            "--steps",
            "20",
        ],
    ];
    let (a, b) = (root.join("a"), root.join("b"));
    for args in &scenarios {
        run_cli(&a, args)?;
        run_cli(&b, args)?;
    }
    let files = csv_files(&a);
    ensure!(
        files.len() >= scenarios.len(),
        "only {} CSV files written",
        files.len()
    );
    for f in &files {
        let other = b.join(f.strip_prefix(&a).unwrap());
        let (x, y) = (
            std::fs::read(f).map_err(|e| e.to_string())?,
            std::fs::read(&other).map_err(|e| e.to_string())?,
        );
        ensure!(
            x == y,
            "{} differs between runs",
            f.strip_prefix(&a).unwrap().display()
        );
    }
    let _ = std::fs::remove_dir_all(&root);
    Ok(format!(
        "{} scenarios, {} CSV files identical across reruns",
        scenarios.len(),
        files.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("deadbeat stabilization", deadbeat),
        ("contraction law", contraction_law),
        ("gain-range boundaries", gain_boundaries),
        ("orbit characterization", orbit_characterization),
        ("closed-form flow vs RK4", closed_form_flow),
        ("aSLIP dynamics oracle", aslip_dynamics),
        ("gait optimization", gait_optimization),
        ("aSLIP velocity sweep", sweep),
        ("P2 aSLIP walking", p2_walking),
        ("Raibert comparison", raibert),
        ("3D composition", composition),
        ("determinism", determinism),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(format!(
                "panicked: {:?}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            ))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:2} FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
