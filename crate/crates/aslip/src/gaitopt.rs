//! Direct-collocation optimization of the periodic stepping-in-place gait.
//!
//! In place, the mass moves vertically above coincident feet, so each node
//! carries the mass height and vertical velocity plus length, rate and
//! acceleration of both actuators. Leg 1 is in stance through single support
//! and trails in double support; leg 2 swings and then leads. Periodicity
//! swaps the legs so the same profile serves both physical legs.

use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{AslipError, Result};
use crate::gait::{
    Gait, GaitBoundary, GaitMetadata, GaitSegment, LegProfile, ReplayStats, GAIT_SCHEMA,
};
use crate::nlp::{solve, NlpProblem, SolverOptions};
use crate::params::AslipParams;
use crate::sim::{run_walking_from, ControllerKind, InitialCondition, LegId, SimConfig};

/// Actuator accelerations are optimized in units of this many m/s².
const ACCEL_SCALE: f64 = 10.0;

const Z: usize = 0;
const ZD: usize = 1;
const L1: usize = 2;
const L1D: usize = 3;
const U1: usize = 4;
const L2: usize = 5;
const L2D: usize = 6;
const U2: usize = 7;
const NODE_VARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitOptOptions {
    pub ssp_intervals: usize,
    pub dsp_intervals: usize,
    pub t_ssp_bounds: (f64, f64),
    pub t_dsp_bounds: (f64, f64),
    /// Actuator length bounds; defaults to the parameter range.
    pub leg_length_bounds: Option<(f64, f64)>,
    /// Largest leg force, in body weights.
    pub force_cap: f64,
    /// Smallest force on a loaded leg away from touchdown and lift-off, in
    /// body weights.
    pub min_support_force: f64,
    /// Trailing-leg force floor at touchdown, in body weights, falling
    /// linearly to zero at lift-off; keeps the unloading transversal.
    pub liftoff_force_margin: f64,
    /// Swing-foot clearance at mid single support (m).
    pub clearance: f64,
    /// Minimum approach speed of the swing foot at touchdown (m/s).
    pub touchdown_speed: f64,
    /// Actuator length of the static initial guess (m).
    pub nominal_leg_length: f64,
    pub initial_durations: (f64, f64),
    pub cost_weight: f64,
    pub constraint_tol: f64,
    pub max_outer: usize,
    /// Re-anchor the boundary state on the simulator's own periodic orbit.
    pub refine_with_simulation: bool,
    pub replay_steps: usize,
    pub sim: SimConfig,
}

impl Default for GaitOptOptions {
    fn default() -> Self {
        Self {
            ssp_intervals: 30,
            dsp_intervals: 10,
            t_ssp_bounds: (0.3, 0.4),
            t_dsp_bounds: (0.05, 0.1),
            leg_length_bounds: Some((0.8, 1.0)),
            force_cap: 3.0,
            min_support_force: 0.1,
            liftoff_force_margin: 0.5,
            clearance: 0.03,
            touchdown_speed: 0.05,
            nominal_leg_length: 0.9,
            initial_durations: (0.4, 0.1),
            cost_weight: 1.0,
            constraint_tol: 1e-9,
            max_outer: 40,
            refine_with_simulation: true,
            replay_steps: 10,
            sim: SimConfig {
                dump_every: 0,
                ..SimConfig::default()
            },
        }
    }
}

/// The collocation NLP. Public so residuals can be inspected directly.
pub struct CollocationProblem {
    params: AslipParams,
    opts: GaitOptOptions,
    bounds: (f64, f64),
    n_eq: usize,
    n_ineq: usize,
}

/// Row collector for constraint values and, optionally, their partials.
struct Rows<'a> {
    values: Vec<f64>,
    jac: Option<&'a mut Vec<(usize, usize, f64)>>,
    row_offset: usize,
}

impl Rows<'_> {
    fn push(&mut self, value: f64, partials: &[(usize, f64)]) {
        if let Some(j) = self.jac.as_deref_mut() {
            let r = self.row_offset + self.values.len();
            j.extend(partials.iter().map(|&(c, v)| (r, c, v)));
        }
        self.values.push(value);
    }
}

/// Scalar with sparse gradient.
#[derive(Clone, Default)]
struct Expr {
    v: f64,
    d: Vec<(usize, f64)>,
}

impl Expr {
    fn var(x: &[f64], i: usize) -> Self {
        Self {
            v: x[i],
            d: vec![(i, 1.0)],
        }
    }

    fn scale(mut self, k: f64) -> Self {
        self.v *= k;
        for p in &mut self.d {
            p.1 *= k;
        }
        self
    }

    fn add(mut self, other: &Expr, k: f64) -> Self {
        self.v += k * other.v;
        self.d.extend(other.d.iter().map(|&(i, v)| (i, k * v)));
        self
    }

    fn offset(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl CollocationProblem {
    pub fn new(params: AslipParams, opts: GaitOptOptions) -> Result<Self> {
        params.validate()?;
        if opts.ssp_intervals < 4 || opts.dsp_intervals < 2 {
            return Err(AslipError::InvalidParams(
                "collocation needs ≥ 4 SSP and ≥ 2 DSP intervals".into(),
            ));
        }
        let bounds = opts.leg_length_bounds.unwrap_or(params.leg_length_range);
        let mut p = Self {
            params,
            opts,
            bounds,
            n_eq: 0,
            n_ineq: 0,
        };
        let x = p.initial_guess();
        let (eq, ineq) = p.rows(&x, None);
        p.n_eq = eq.len();
        p.n_ineq = ineq.len();
        Ok(p)
    }

    pub fn nodes(&self) -> usize {
        self.opts.ssp_intervals + self.opts.dsp_intervals + 1
    }

    fn idx(&self, k: usize, field: usize) -> usize {
        NODE_VARS * k + field
    }

    fn ts(&self) -> usize {
        NODE_VARS * self.nodes()
    }

    fn td(&self) -> usize {
        self.ts() + 1
    }

    /// Static single-leg stance at the nominal length, both actuators equal.
    pub fn initial_guess(&self) -> Vec<f64> {
        let l = self.opts.nominal_leg_length;
        let z = l - self.params.weight() / self.params.stiffness(l);
        let mut x = vec![0.0; self.num_vars()];
        for k in 0..self.nodes() {
            x[self.idx(k, Z)] = z;
            x[self.idx(k, L1)] = l;
            x[self.idx(k, L2)] = l;
        }
        x[self.ts()] = self.opts.initial_durations.0;
        x[self.td()] = self.opts.initial_durations.1;
        x
    }

    /// Decision vector sampled from an existing gait by linear interpolation
    /// in normalized domain time.
    pub fn guess_from_gait(&self, gait: &Gait) -> Vec<f64> {
        let n_s = self.opts.ssp_intervals;
        let n_d = self.opts.dsp_intervals;
        let mut x = vec![0.0; self.num_vars()];
        let sample = |v: &[f64], frac: f64| {
            let pos = frac * (v.len() - 1) as f64;
            let i = (pos.floor() as usize).min(v.len() - 2);
            let w = pos - i as f64;
            (1.0 - w) * v[i] + w * v[i + 1]
        };
        for k in 0..self.nodes() {
            let (seg, frac) = if k <= n_s {
                (&gait.ssp, k as f64 / n_s as f64)
            } else {
                (&gait.dsp, (k - n_s) as f64 / n_d as f64)
            };
            let fields = [
                (Z, &seg.mass_height, 1.0),
                (ZD, &seg.mass_velocity, 1.0),
                (L1, &seg.stance.length, 1.0),
                (L1D, &seg.stance.rate, 1.0),
                (U1, &seg.stance.accel, 1.0 / ACCEL_SCALE),
                (L2, &seg.swing.length, 1.0),
                (L2D, &seg.swing.rate, 1.0),
                (U2, &seg.swing.accel, 1.0 / ACCEL_SCALE),
            ];
            for (f, v, scale) in fields {
                x[self.idx(k, f)] = scale * sample(v, frac);
            }
        }
        x[self.ts()] = gait.t_ssp;
        x[self.td()] = gait.t_dsp;
        x
    }

    /// Leg spring force at node `k`, in body weights.
    fn force(&self, x: &[f64], k: usize, leg: usize) -> Expr {
        let (li, ldi) = if leg == 1 { (L1, L1D) } else { (L2, L2D) };
        let (iz, izd, il, ild) = (
            self.idx(k, Z),
            self.idx(k, ZD),
            self.idx(k, li),
            self.idx(k, ldi),
        );
        let l = x[il];
        let s = l - x[iz];
        let sd = x[ild] - x[izd];
        let p = &self.params;
        let (kk, dd) = (p.stiffness(l), p.damping(l));
        let w = 1.0 / p.weight();
        Expr {
            v: w * (kk * s + dd * sd),
            d: vec![
                (iz, -w * kk),
                (izd, -w * dd),
                (
                    il,
                    w * (p.stiffness_slope(l) * s + kk + p.damping_slope(l) * sd),
                ),
                (ild, w * dd),
            ],
        }
    }

    /// Vertical acceleration at node `k` with the given legs loaded.
    fn accel(&self, x: &[f64], k: usize, double: bool) -> Expr {
        let g = self.params.g;
        let mut a = self.force(x, k, 1).scale(g);
        if double {
            a = a.add(&self.force(x, k, 2), g);
        }
        a.offset(-g)
    }

    /// Rate of each integrated quantity at node `k`: (value index, rate).
    fn rates(&self, x: &[f64], k: usize, double: bool) -> [(usize, Expr); 5] {
        [
            (Z, Expr::var(x, self.idx(k, ZD))),
            (ZD, self.accel(x, k, double)),
            (L1, Expr::var(x, self.idx(k, L1D))),
            (L1D, Expr::var(x, self.idx(k, U1)).scale(ACCEL_SCALE)),
            (L2, Expr::var(x, self.idx(k, L2D))),
        ]
    }

    fn rows<'a>(
        &self,
        x: &[f64],
        mut jac: Option<&'a mut Vec<(usize, usize, f64)>>,
    ) -> (Vec<f64>, Vec<f64>) {
        let n_s = self.opts.ssp_intervals;
        let n_d = self.opts.dsp_intervals;
        let last = n_s + n_d;
        let mut eq = Rows {
            values: Vec::new(),
            jac: jac.as_deref_mut(),
            row_offset: 0,
        };

        for i in 0..last {
            let double = i >= n_s;
            let (it, n) = if double {
                (self.td(), n_d)
            } else {
                (self.ts(), n_s)
            };
            let h2 = x[it] / (2.0 * n as f64);
            let mut a = self.rates(x, i, double).to_vec();
            a.push((L2D, Expr::var(x, self.idx(i, U2)).scale(ACCEL_SCALE)));
            let mut b = self.rates(x, i + 1, double).to_vec();
            b.push((L2D, Expr::var(x, self.idx(i + 1, U2)).scale(ACCEL_SCALE)));
            for ((field, ra), (_, rb)) in a.into_iter().zip(b) {
                let e = Expr::var(x, self.idx(i + 1, field))
                    .add(&Expr::var(x, self.idx(i, field)), -1.0)
                    .add(&ra, -h2)
                    .add(&rb, -h2);
                let mut d = e.d;
                d.push((it, -(ra.v + rb.v) / (2.0 * n as f64)));
                eq.push(e.v, &d);
            }
        }
        // Periodicity with the legs exchanged.
        for (a, b) in [
            (Z, Z),
            (ZD, ZD),
            (L1, L2),
            (L1D, L2D),
            (L2, L1),
            (L2D, L1D),
            (U1, U2),
            (U2, U1),
        ] {
            let (ia, ib) = (self.idx(0, a), self.idx(last, b));
            eq.push(x[ia] - x[ib], &[(ia, 1.0), (ib, -1.0)]);
        }
        // Touchdown: swing foot reaches the ground.
        let (iz, il2) = (self.idx(n_s, Z), self.idx(n_s, L2));
        eq.push(x[iz] - x[il2], &[(iz, 1.0), (il2, -1.0)]);
        // Lift-off: trailing leg unloaded.
        let f = self.force(x, last, 1);
        eq.push(f.v, &f.d);

        let n_eq = eq.values.len();
        let eq_values = eq.values;
        let mut ineq = Rows {
            values: Vec::new(),
            jac,
            row_offset: n_eq,
        };
        let (lo, hi) = self.bounds;
        for k in 0..=last {
            for li in [L1, L2] {
                let i = self.idx(k, li);
                ineq.push(lo - x[i], &[(i, -1.0)]);
                ineq.push(x[i] - hi, &[(i, 1.0)]);
            }
        }
        let o = &self.opts;
        let push_ge = |rows: &mut Rows, e: Expr, bound: f64| {
            let neg = e.scale(-1.0);
            rows.push(neg.v + bound, &neg.d);
        };
        for k in 0..=last {
            let f1 = self.force(x, k, 1);
            let cap = f1.clone().offset(-o.force_cap);
            ineq.push(cap.v, &cap.d);
            if k <= n_s {
                push_ge(&mut ineq, f1, o.min_support_force);
            } else if k < last {
                push_ge(
                    &mut ineq,
                    f1,
                    o.liftoff_force_margin * (last - k) as f64 / n_d as f64,
                );
            }
            if k >= n_s {
                let f2 = self.force(x, k, 2);
                let cap = f2.clone().offset(-o.force_cap);
                ineq.push(cap.v, &cap.d);
                push_ge(
                    &mut ineq,
                    f2,
                    if k == n_s { 0.0 } else { o.min_support_force },
                );
            }
        }
        // Swing-foot height z − L₂: never below its lift-off value early on,
        // then above a half-sine clearance profile until touchdown.
        let height =
            |k: usize| Expr::var(x, self.idx(k, Z)).add(&Expr::var(x, self.idx(k, L2)), -1.0);
        let h0 = height(0);
        for k in 1..n_s {
            if 4 * k < n_s {
                push_ge(&mut ineq, height(k).add(&h0, -1.0), 0.0);
            } else {
                let profile = o.clearance * (std::f64::consts::PI * k as f64 / n_s as f64).sin();
                push_ge(&mut ineq, height(k), profile);
            }
        }
        let approach = Expr::var(x, self.idx(n_s, ZD)).add(&Expr::var(x, self.idx(n_s, L2D)), -1.0);
        ineq.push(approach.v + o.touchdown_speed, &approach.d);
        for (i, (lo, hi)) in [(self.ts(), o.t_ssp_bounds), (self.td(), o.t_dsp_bounds)] {
            ineq.push(lo - x[i], &[(i, -1.0)]);
            ineq.push(x[i] - hi, &[(i, 1.0)]);
        }
        (eq_values, ineq.values)
    }

    /// Largest collocation defect (the dynamics rows only).
    pub fn max_defect(&self, x: &[f64]) -> f64 {
        let (eq, _) = self.rows(x, None);
        let n_def = 6 * (self.nodes() - 1);
        eq[..n_def].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest periodicity residual.
    pub fn periodicity_residual(&self, x: &[f64]) -> f64 {
        let (eq, _) = self.rows(x, None);
        let n_def = 6 * (self.nodes() - 1);
        eq[n_def..n_def + 8].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn control_cost(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n_s = self.opts.ssp_intervals;
        let n_d = self.opts.dsp_intervals;
        let w = self.opts.cost_weight;
        let mut total = 0.0;
        let mut g = grad;
        for i in 0..n_s + n_d {
            let (it, n) = if i >= n_s {
                (self.td(), n_d)
            } else {
                (self.ts(), n_s)
            };
            let h2 = x[it] / (2.0 * n as f64);
            let mut sq = 0.0;
            for k in [i, i + 1] {
                for u in [U1, U2] {
                    let j = self.idx(k, u);
                    sq += x[j] * x[j];
                    if let Some(g) = g.as_deref_mut() {
                        g[j] += w * h2 * 2.0 * x[j];
                    }
                }
            }
            if let Some(g) = g.as_deref_mut() {
                g[it] += w * sq / (2.0 * n as f64);
            }
            total += h2 * sq;
        }
        w * total
    }
}

impl NlpProblem for CollocationProblem {
    fn num_vars(&self) -> usize {
        NODE_VARS * self.nodes() + 2
    }

    fn num_eq(&self) -> usize {
        self.n_eq
    }

    fn num_ineq(&self) -> usize {
        self.n_ineq
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.control_cost(x, None)
    }

    fn objective_gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        self.control_cost(x, Some(grad));
    }

    fn constraints(&self, x: &[f64], out: &mut [f64]) {
        let (eq, ineq) = self.rows(x, None);
        out[..eq.len()].copy_from_slice(&eq);
        out[eq.len()..].copy_from_slice(&ineq);
    }

    fn jacobian(&self, x: &[f64], out: &mut Vec<(usize, usize, f64)>) {
        self.rows(x, Some(out));
    }
}

/// Optimizes the stepping-in-place gait and, if enabled, anchors its
/// boundary state on the simulator's periodic orbit.
pub fn optimize_stepping_in_place(params: &AslipParams, opts: &GaitOptOptions) -> Result<Gait> {
    optimize(params, opts, None)
}

/// Same as [`optimize_stepping_in_place`] but starts from `start`
/// resampled onto the grid in `opts`, e.g. to refine a coarse solution.
pub fn optimize_from(params: &AslipParams, opts: &GaitOptOptions, start: &Gait) -> Result<Gait> {
    optimize(params, opts, Some(start))
}

fn optimize(params: &AslipParams, opts: &GaitOptOptions, start: Option<&Gait>) -> Result<Gait> {
    let started = Instant::now();
    let problem = CollocationProblem::new(params.clone(), opts.clone())?;
    let solver = SolverOptions {
        constraint_tol: opts.constraint_tol,
        max_outer: opts.max_outer,
        ..SolverOptions::default()
    };
    let x0 = match start {
        Some(g) => problem.guess_from_gait(g),
        None => problem.initial_guess(),
    };
    let report = solve(&problem, &x0, &solver);
    let x = &report.x;
    let max_defect = problem.max_defect(x);
    if !report.converged {
        return Err(AslipError::Optimization(format!(
            "no feasible gait: violation {:.3e}, defect {:.3e} after {} outer iterations",
            report.max_violation, max_defect, report.outer_iterations
        )));
    }
    let mut gait = problem.to_gait(
        x,
        report.objective,
        report.max_violation,
        report.inner_iterations,
    );
    gait.metadata.max_defect = max_defect;
    if opts.refine_with_simulation {
        refine_boundary(&mut gait, &opts.sim)?;
        let stats = replay_stats(&gait, &opts.sim, opts.replay_steps)?;
        gait.metadata.replay = Some(stats);
    }
    gait.metadata.solve_seconds = started.elapsed().as_secs_f64();
    Ok(gait)
}

impl CollocationProblem {
    fn to_gait(&self, x: &[f64], cost: f64, violation: f64, iterations: usize) -> Gait {
        let n_s = self.opts.ssp_intervals;
        let last = self.nodes() - 1;
        let get = |k: usize, f: usize| x[self.idx(k, f)];
        let w = self.params.weight();
        let segment = |range: std::ops::RangeInclusive<usize>, duration: f64, double: bool| {
            let ks: Vec<usize> = range.collect();
            let prof = |l: usize, ld: usize, u: usize| LegProfile {
                length: ks.iter().map(|&k| get(k, l)).collect(),
                rate: ks.iter().map(|&k| get(k, ld)).collect(),
                accel: ks.iter().map(|&k| ACCEL_SCALE * get(k, u)).collect(),
            };
            GaitSegment {
                duration,
                stance: prof(L1, L1D, U1),
                swing: prof(L2, L2D, U2),
                mass_height: ks.iter().map(|&k| get(k, Z)).collect(),
                mass_velocity: ks.iter().map(|&k| get(k, ZD)).collect(),
                stance_force: ks.iter().map(|&k| w * self.force(x, k, 1).v).collect(),
                swing_force: ks
                    .iter()
                    .map(|&k| {
                        if double {
                            w * self.force(x, k, 2).v
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            }
        };
        let (t_ssp, t_dsp) = (x[self.ts()], x[self.td()]);
        Gait {
            schema: GAIT_SCHEMA.to_string(),
            params: self.params.clone(),
            t_ssp,
            t_dsp,
            ssp: segment(0..=n_s, t_ssp, false),
            dsp: segment(n_s..=last, t_dsp, true),
            boundary: GaitBoundary {
                clock_phase: 0.0,
                mass_height: get(0, Z),
                mass_velocity: get(0, ZD),
                stance_length: get(0, L1),
                stance_rate: get(0, L1D),
                swing_length: get(0, L2),
                swing_rate: get(0, L2D),
            },
            metadata: GaitMetadata {
                cost,
                max_defect: 0.0,
                periodicity_residual: self.periodicity_residual(x),
                net_velocity: 0.0,
                max_violation: violation,
                iterations,
                solve_seconds: 0.0,
                replay: None,
            },
        }
    }
}

fn open_loop(sim: &SimConfig, steps: usize) -> SimConfig {
    SimConfig {
        controller: ControllerKind::Fixed { step_length: 0.0 },
        max_steps: steps,
        velocity_schedule: vec![],
        ..sim.clone()
    }
}

/// One simulated in-place step from lift-off state `(z, ż)` at leg-A clock
/// phase `phase`: returns the lift-off state error and the step duration
/// error relative to the clock period.
fn shooting_residual(gait: &Gait, sim: &SimConfig, y: &Vector3<f64>) -> Result<Vector3<f64>> {
    let init = InitialCondition::in_place(gait, LegId::A, y[2], y[0], y[1]);
    let run = run_walking_from(gait, &open_loop(sim, 1), &init).map_err(|f| f.error)?;
    let s = &run.steps[0];
    Ok(Vector3::new(
        s.end_height - y[0],
        s.end_vertical_velocity - y[1],
        s.t_ssp + s.t_dsp - gait.step_period(),
    ))
}

/// Newton shooting for the simulator's periodic in-place orbit, so the
/// stored boundary state replays without drift. A period-one orbit must
/// last exactly one clock step, which fixes the lift-off phase.
pub fn refine_boundary(gait: &mut Gait, sim: &SimConfig) -> Result<()> {
    let b = gait.boundary;
    let mut y = Vector3::new(b.mass_height, b.mass_velocity, b.clock_phase);
    let scale = Vector3::new(1e-7, 1e-6, 1e-7);
    let mut r = shooting_residual(gait, sim, &y)?;
    for _ in 0..60 {
        if r.amax() <= 1e-11 {
            break;
        }
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let mut yp = y;
            yp[j] += scale[j];
            let rp = shooting_residual(gait, sim, &yp)?;
            jac.set_column(j, &((rp - r) / scale[j]));
        }
        let step = jac
            .lu()
            .solve(&(-r))
            .ok_or_else(|| AslipError::Optimization("singular shooting Jacobian".into()))?;
        // Keep early steps small; the collocation orbit is already close.
        let mut alpha = 0.01 / step.amax().max(0.01);
        let mut accepted = false;
        for _ in 0..12 {
            let trial = y + step * alpha;
            if let Ok(rt) = shooting_residual(gait, sim, &trial) {
                if rt.norm() < r.norm() {
                    y = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let r = shooting_residual(gait, sim, &y)?;
    if r.amax() > 1e-8 {
        return Err(AslipError::Optimization(format!(
            "periodic orbit search stopped at residual {:.3e}",
            r.amax()
        )));
    }
    let init = InitialCondition::in_place(gait, LegId::A, y[2], y[0], y[1]);
    let st = init.state;
    gait.boundary = GaitBoundary {
        clock_phase: y[2],
        mass_height: y[0],
        mass_velocity: y[1],
        stance_length: st.stance.l,
        stance_rate: st.stance.l_dot,
        swing_length: st.swing_length,
        swing_rate: st.swing_length_dot,
    };
    Ok(())
}

fn replay_stats(gait: &Gait, sim: &SimConfig, steps: usize) -> Result<ReplayStats> {
    let cfg = SimConfig {
        dump_every: 1,
        ..open_loop(sim, steps.max(1))
    };
    let run =
        run_walking_from(gait, &cfg, &InitialCondition::from_gait(gait)).map_err(|f| f.error)?;
    let n = run.steps.len() as f64;
    let t_ssp = run.steps.iter().map(|s| s.t_ssp).sum::<f64>() / n;
    let t_dsp = run.steps.iter().map(|s| s.t_dsp).sum::<f64>() / n;
    let tr = &run.trajectory;
    let mut area = 0.0;
    for w in tr.windows(2) {
        area += 0.5 * (w[0].z_mass + w[1].z_mass) * (w[1].t - w[0].t);
    }
    let span = tr.last().map_or(0.0, |s| s.t) - tr.first().map_or(0.0, |s| s.t);
    let report = validate_gait(gait, sim);
    Ok(ReplayStats {
        t_ssp,
        t_dsp,
        mean_height: area / span,
        max_drift: report.max_drift,
    })
}

/// Lift-off state after one replayed step and its change from the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub step: usize,
    pub height: f64,
    pub vertical_velocity: f64,
    pub horizontal_velocity: f64,
    pub duration: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitValidation {
    pub steps: Vec<DriftRecord>,
    pub max_drift: f64,
    pub diverged: bool,
    pub failure: Option<String>,
}

/// Replays the gait for ten steps with fixed zero step length and reports
/// how far each lift-off state has moved from the gait's boundary state.
pub fn validate_gait(gait: &Gait, sim: &SimConfig) -> GaitValidation {
    let cfg = SimConfig {
        dump_every: 0,
        ..open_loop(sim, 10)
    };
    let (run, failure) = match run_walking_from(gait, &cfg, &InitialCondition::from_gait(gait)) {
        Ok(run) => (run, None),
        Err(f) => (f.run, Some(f.error.to_string())),
    };
    let b = &gait.boundary;
    let start = (b.mass_height, b.mass_velocity, 0.0);
    let mut steps = Vec::new();
    for s in &run.steps {
        let cur = (s.end_height, s.end_vertical_velocity, s.end_xdot);
        let drift = (cur.0 - start.0)
            .abs()
            .max((cur.1 - start.1).abs())
            .max((cur.2 - start.2).abs());
        steps.push(DriftRecord {
            step: s.index,
            height: cur.0,
            vertical_velocity: cur.1,
            horizontal_velocity: cur.2,
            duration: s.t_ssp + s.t_dsp,
            drift,
        });
    }
    let max_drift = steps.iter().fold(0.0_f64, |m, s| m.max(s.drift));
    GaitValidation {
        diverged: failure.is_some() || !max_drift.is_finite(),
        steps,
        max_drift,
        failure,
    }
}
