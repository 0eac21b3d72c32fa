//! Scenario runners. Each returns its results as data and writes them,
//! with a `manifest.json` of the resolved configuration, into one
//! directory per scenario.

use std::path::{Path, PathBuf};

use aslip::gait::Gait;
use aslip::gaitopt::{optimize_stepping_in_place, validate_gait, GaitValidation};
use aslip::sim::{run_walking, ControllerKind, SimConfig, WalkingRun, WalkingSummary};
use hlip::walk3d::{converged_velocity, optimal_gains, rollout_3d, settling_step};
use hlip::{
    compose_3d, contraction_factor, dsp_flow, optimal_gain, position_factor, rollout,
    sample_ssp_arc, verify_orbit, Category, HlipError, Orbit, OrbitReport, OrbitalLine, P2Orbit,
    PlanarState, PlaneSpec, RolloutLog, RolloutRecord, StanceLeg, SteppingGain,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, GainSpec, RANDOM_XDOT_RANGE, RANDOM_X_RANGE};
use crate::error::{CliError, Result};
use crate::svg::{Plot, Series, PALETTE};

/// Output directory of one scenario plus the list of files written to it.
pub struct Scenario {
    pub dir: PathBuf,
    command: &'static str,
    seed: u64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    random_state_ranges: RandomRanges,
    config: &'a Config,
    files: &'a [String],
}

#[derive(Serialize)]
struct RandomRanges {
    x: (f64, f64),
    xdot: (f64, f64),
}

impl Scenario {
    pub fn create(out: &Path, command: &'static str, config: &Config, seed: u64) -> Result<Self> {
        let dir = out.join(config.name.as_deref().unwrap_or(command));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            command,
            seed,
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn finish(mut self, config: &Config) -> Result<PathBuf> {
        let mut files = self.files.clone();
        files.push("manifest.json".into());
        let manifest = Manifest {
            command: self.command,
            seed: self.seed,
            random_state_ranges: RandomRanges {
                x: RANDOM_X_RANGE,
                xdot: RANDOM_XDOT_RANGE,
            },
            config,
            files: &files,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.dir)
    }
}

fn stance_name(s: StanceLeg) -> &'static str {
    match s {
        StanceLeg::Left => "left",
        StanceLeg::Right => "right",
    }
}

// ---------------------------------------------------------------- orbit

/// One step of an orbit in the phase plane.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitBranch {
    pub stance: &'static str,
    /// `(t, x, ẋ)` along single support.
    pub ssp: Vec<(f64, f64, f64)>,
    /// Double support: start and end `(x, ẋ)`.
    pub dsp: [(f64, f64); 2],
    /// Foot exchange: from the end of double support to the next single support.
    pub jump: [(f64, f64); 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitOutput {
    pub orbit: Orbit,
    pub lambda: f64,
    pub report: OrbitReport,
    pub orbital_lines: [OrbitalLine; 2],
    pub branches: Vec<OrbitBranch>,
}

fn ssp_start(orbit: &Orbit, stance: StanceLeg) -> PlanarState {
    match orbit {
        Orbit::P1(o) => o.ssp_initial(),
        Orbit::P2(o) => o.ssp_initial(stance),
    }
}

pub fn orbit_branches(orbit: &Orbit, arc_dt: f64) -> Result<Vec<OrbitBranch>> {
    let p = *orbit.params();
    let mut stance = StanceLeg::Left;
    let mut out = Vec::new();
    for _ in 0..orbit.period_steps() {
        let start = ssp_start(orbit, stance);
        let ssp = sample_ssp_arc(start, p.t_ssp, arc_dt, &p)?;
        let pre = orbit.target(stance);
        let dsp_end = dsp_flow(pre, p.t_dsp)?;
        let next = ssp_start(orbit, stance.other());
        out.push(OrbitBranch {
            stance: stance_name(stance),
            ssp,
            dsp: [(pre.x, pre.xdot), (dsp_end.x, dsp_end.xdot)],
            jump: [(dsp_end.x, dsp_end.xdot), (next.x, next.xdot)],
        });
        stance = stance.other();
    }
    Ok(out)
}

pub fn phase_portrait(
    title: &str,
    orbit: &Orbit,
    branches: &[OrbitBranch],
    lambda: f64,
) -> Result<Plot> {
    let mut plot = Plot::new(title, "x (m)", "xdot (m/s)");
    for (i, b) in branches.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let label = if branches.len() > 1 {
            format!("{} stance", b.stance)
        } else {
            "orbit".into()
        };
        plot.add(Series::line(
            label,
            b.ssp.iter().map(|&(_, x, v)| (x, v)).collect(),
            color,
        ));
        plot.add(Series::line("", b.dsp.to_vec(), color));
        plot.add(Series::line("", b.jump.to_vec(), color).dashed());
    }
    plot.guide(lambda, 0.0, "#bbbbbb", false)
        .guide(-lambda, 0.0, "#bbbbbb", false);
    for line in orbit.orbital_lines()? {
        plot.guide(line.slope, line.offset, "#555555", true);
    }
    Ok(plot)
}

pub fn orbit(config: &Config) -> Result<OrbitOutput> {
    let o = &config.orbit;
    let orbit = o.plane().build(config.hlip)?;
    let lambda = config.hlip.lambda()?;
    Ok(OrbitOutput {
        orbit,
        lambda,
        report: verify_orbit(&orbit)?,
        orbital_lines: orbit.orbital_lines()?,
        branches: orbit_branches(&orbit, o.arc_dt)?,
    })
}

pub fn cmd_orbit(config: &Config, out: &Path, seed: u64) -> Result<OrbitOutput> {
    let result = orbit(config)?;
    let mut sc = Scenario::create(out, "orbit", config, seed)?;
    sc.write_json("orbit.json", &result)?;
    let kind = match result.orbit {
        Orbit::P1(_) => "P1",
        Orbit::P2(_) => "P2",
    };
    let title = format!("{kind} orbit, v = {} m/s", result.orbit.net_velocity());
    let plot = phase_portrait(&title, &result.orbit, &result.branches, result.lambda)?;
    sc.write("phase.svg", plot.render().as_bytes())?;
    println!(
        "{kind} orbit: closure residual {:.3e}, measured velocity {:.6} m/s",
        result.report.closure_residual, result.report.measured_net_velocity
    );
    sc.finish(config)?;
    Ok(result)
}

// ------------------------------------------------------------ stabilize

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    /// Error magnitude does not shrink from step to step.
    NonDecaying,
    Diverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizeRun {
    pub index: usize,
    pub initial: PlanarState,
    pub status: RunStatus,
    /// `e_v(1) / e_v(0)`; `None` when the first error is zero.
    pub velocity_ratio: Option<f64>,
    pub records: Vec<RolloutRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GainResult {
    pub label: String,
    pub gain: f64,
    pub contraction: f64,
    pub position_factor: f64,
    pub runs: Vec<StabilizeRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizeOutput {
    pub orbit: Orbit,
    pub optimal_gain: f64,
    pub gains: Vec<GainResult>,
}

#[derive(Serialize)]
struct StabilizeRow<'a> {
    gain_label: &'a str,
    gain: f64,
    run: usize,
    step: usize,
    x: f64,
    xdot: f64,
    l_cmd: f64,
    ev: f64,
    ex: f64,
}

/// Random pre-impact states from the documented ranges.
pub fn random_states(seed: u64, n: usize) -> Vec<PlanarState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = rng.gen_range(RANDOM_X_RANGE.0..=RANDOM_X_RANGE.1);
            let v = rng.gen_range(RANDOM_XDOT_RANGE.0..=RANDOM_XDOT_RANGE.1);
            PlanarState::new(x, v)
        })
        .collect()
}

pub fn stabilize(config: &Config, seed: u64) -> Result<StabilizeOutput> {
    let s = &config.stabilize;
    if s.steps == 0 || s.initial_states == 0 {
        return Err(CliError::Usage(
            "stabilize needs at least one step and one initial state".into(),
        ));
    }
    let orbit = s.plane().build(config.hlip)?;
    let p = config.hlip;
    let k_star = optimal_gain(&p)?.0;
    let gains: Vec<(String, f64)> = if s.gain_grid.is_empty() {
        match s.gain {
            GainSpec::Named(_) => vec![("K*".into(), k_star)],
            GainSpec::Value(k) => vec![(format!("{k}"), k)],
        }
    } else {
        s.gain_grid
            .iter()
            .map(|m| (format!("{m}K*"), m * k_star))
            .collect()
    };
    let states = random_states(seed, s.initial_states);
    let mut results = Vec::new();
    for (label, k) in gains {
        let gain = SteppingGain(k);
        let contraction = contraction_factor(gain, &p)?;
        let mut runs = Vec::new();
        for (index, &initial) in states.iter().enumerate() {
            let (log, diverged) = match rollout(initial, &orbit, gain, s.steps, StanceLeg::Left) {
                Ok(log) => (log, false),
                Err(HlipError::Diverged { log, .. }) => (*log, true),
                Err(e) => return Err(e.into()),
            };
            let ev = log.velocity_errors();
            let velocity_ratio = match ev.as_slice() {
                [a, b, ..] if *a != 0.0 => Some(b / a),
                _ => None,
            };
            let status = if diverged || ev.iter().any(|e| !e.is_finite()) {
                RunStatus::Diverged
            } else if contraction.abs() >= 1.0 - 1e-9 && ev.first().is_some_and(|e| e.abs() > 1e-12)
            {
                RunStatus::NonDecaying
            } else {
                RunStatus::Converged
            };
            runs.push(StabilizeRun {
                index,
                initial,
                status,
                velocity_ratio,
                records: log.records,
            });
        }
        results.push(GainResult {
            label,
            gain: k,
            contraction,
            position_factor: position_factor(gain, &p)?,
            runs,
        });
    }
    Ok(StabilizeOutput {
        orbit,
        optimal_gain: k_star,
        gains: results,
    })
}

pub fn cmd_stabilize(config: &Config, out: &Path, seed: u64) -> Result<StabilizeOutput> {
    let result = stabilize(config, seed)?;
    let mut sc = Scenario::create(out, "stabilize", config, seed)?;
    let mut rows = Vec::new();
    let mut plot = Plot::new("Velocity error per step", "step", "log10 |velocity error|");
    let mut color = 0;
    for g in &result.gains {
        for r in &g.runs {
            for rec in &r.records {
                rows.push(StabilizeRow {
                    gain_label: &g.label,
                    gain: g.gain,
                    run: r.index,
                    step: rec.step,
                    x: rec.x,
                    xdot: rec.xdot,
                    l_cmd: rec.l_cmd,
                    ev: rec.ev,
                    ex: rec.ex,
                });
            }
            // Exact zeros are drawn at the double-precision floor.
            let pts = r
                .records
                .iter()
                .map(|rec| (rec.step as f64, rec.ev.abs().max(1e-17).log10()))
                .collect();
            let label = if g.runs.len() > 1 {
                format!("{} run {}", g.label, r.index)
            } else {
                g.label.clone()
            };
            plot.add(Series::line(label, pts, PALETTE[color % PALETTE.len()]));
            color += 1;
            match r.status {
                RunStatus::Converged => {}
                RunStatus::NonDecaying => {
                    eprintln!(
                        "warning: gain {} ({}) does not contract; run {} keeps its error",
                        g.label, g.gain, r.index
                    )
                }
                RunStatus::Diverged => eprintln!(
                    "warning: gain {} ({}) diverged in run {} after {} steps",
                    g.label,
                    g.gain,
                    r.index,
                    r.records.len()
                ),
            }
        }
        println!(
            "gain {} = {:.6}: contraction {:+.6}",
            g.label, g.gain, g.contraction
        );
    }
    sc.write_csv("rollout.csv", &rows)?;
    sc.write_json("summary.json", &result)?;
    sc.write("convergence.svg", plot.render().as_bytes())?;
    sc.finish(config)?;
    Ok(result)
}

// -------------------------------------------------------------- gaitopt

#[derive(Debug, Clone, Serialize)]
pub struct GaitoptOutput {
    pub gait: Gait,
    pub validation: GaitValidation,
}

fn gait_plot(gait: &Gait) -> Plot {
    let mut plot = Plot::new(
        "Stepping-in-place gait over one stride",
        "t (s)",
        "leg length (m), force / weight, mass height (m)",
    );
    let (ts, td) = (gait.t_ssp, gait.t_dsp);
    let step = ts + td;
    let mut length = Vec::new();
    let mut force = Vec::new();
    let mut height = Vec::new();
    // One leg over a stride: stance, trailing, swing, leading.
    let pieces = [
        (0.0, &gait.ssp, &gait.ssp.stance, &gait.ssp.stance_force),
        (ts, &gait.dsp, &gait.dsp.stance, &gait.dsp.stance_force),
        (step, &gait.ssp, &gait.ssp.swing, &gait.ssp.swing_force),
        (step + ts, &gait.dsp, &gait.dsp.swing, &gait.dsp.swing_force),
    ];
    let w = gait.params.weight();
    for (t0, seg, leg, f) in pieces {
        let h = seg.spacing();
        for k in 0..seg.samples() {
            let t = t0 + k as f64 * h;
            length.push((t, leg.length[k]));
            force.push((t, f[k] / w));
            height.push((t, seg.mass_height[k]));
        }
    }
    plot.add(Series::line("leg length", length, PALETTE[0]));
    plot.add(Series::line("leg force", force, PALETTE[1]));
    plot.add(Series::line("mass height", height, PALETTE[2]));
    plot
}

pub fn cmd_gaitopt(config: &Config, out: &Path, seed: u64) -> Result<GaitoptOutput> {
    let g = &config.gait;
    let gait = optimize_stepping_in_place(&g.params, &g.options)?;
    let validation = validate_gait(&gait, &g.options.sim);
    let mut sc = Scenario::create(out, "gaitopt", config, seed)?;
    sc.write("gait.json", gait.to_json()?.as_bytes())?;
    sc.write_csv("validation.csv", &validation.steps)?;
    sc.write_json("validation.json", &validation)?;
    sc.write("gait.svg", gait_plot(&gait).render().as_bytes())?;
    let m = &gait.metadata;
    println!(
        "gait: T_SSP {:.4} s, T_DSP {:.4} s, cost {:.6}, defect {:.2e}, periodicity {:.2e}, replay drift {:.2e}",
        gait.t_ssp, gait.t_dsp, m.cost, m.max_defect, m.periodicity_residual, validation.max_drift
    );
    if validation.diverged {
        eprintln!(
            "warning: open-loop replay failed: {}",
            validation.failure.as_deref().unwrap_or("drift not finite")
        );
    }
    sc.finish(config)?;
    Ok(GaitoptOutput { gait, validation })
}

/// The configured gait file, or a fresh optimization saved into `sc`.
pub fn resolve_gait(config: &Config, sc: &mut Scenario) -> Result<Gait> {
    match &config.gait.file {
        Some(path) => Ok(Gait::load(path)?),
        None => {
            let gait = optimize_stepping_in_place(&config.gait.params, &config.gait.options)?;
            sc.write("gait.json", gait.to_json()?.as_bytes())?;
            Ok(gait)
        }
    }
}

// ------------------------------------------------------------ aslip-run

#[derive(Debug, Clone, Serialize)]
pub struct WalkOutcome {
    pub summary: Option<WalkingSummary>,
    pub failure: Option<String>,
    pub run: WalkingRun,
}

impl WalkOutcome {
    pub fn diverged(&self) -> bool {
        self.failure.is_some()
    }
}

pub fn walk(gait: &Gait, sim: &SimConfig) -> WalkOutcome {
    let (run, failure) = match run_walking(gait, sim) {
        Ok(run) => (run, None),
        Err(f) => {
            let msg = f.to_string();
            (f.run, Some(msg))
        }
    };
    WalkOutcome {
        summary: run.summary(sim.average_steps),
        failure,
        run,
    }
}

/// Converged metrics of one derivative gain in the comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct KdRow {
    pub kd: f64,
    pub diverged: bool,
    pub steps: usize,
    pub velocity: Option<f64>,
    pub velocity_error: Option<f64>,
    pub t_ssp: Option<f64>,
    pub step_length: Option<f64>,
    /// Largest step-to-step change of the step length over the averaged tail.
    pub step_length_spread: Option<f64>,
    pub failure: Option<String>,
}

fn kd_row(kd: f64, o: &WalkOutcome, tail: usize) -> KdRow {
    let steps = &o.run.steps;
    let spread = (steps.len() >= tail.max(2)).then(|| {
        steps[steps.len() - tail.max(2)..]
            .windows(2)
            .fold(0.0_f64, |m, w| {
                m.max((w[1].step_length - w[0].step_length).abs())
            })
    });
    KdRow {
        kd,
        diverged: o.diverged(),
        steps: steps.len(),
        velocity: o.summary.map(|s| s.velocity),
        velocity_error: o.summary.map(|s| s.velocity_error),
        t_ssp: o.summary.map(|s| s.t_ssp),
        step_length: o.summary.map(|s| s.step_length),
        step_length_spread: spread,
        failure: o.failure.clone(),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    let n = if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Numerical(e.to_string()))
}

/// Raibert comparison over `kds`, run on a bounded pool, sorted by gain.
pub fn kd_comparison(
    gait: &Gait,
    config: &Config,
    kds: &[f64],
) -> Result<Vec<(KdRow, WalkOutcome)>> {
    let w = &config.walking;
    let mut rows: Vec<(KdRow, WalkOutcome)> = pool(config.sweep.workers)?.install(|| {
        kds.par_iter()
            .map(|&kd| {
                let o = walk(
                    gait,
                    &w.sim_config(ControllerKind::Raibert { kd }, w.velocity),
                );
                (kd_row(kd, &o, w.sim.average_steps), o)
            })
            .collect()
    });
    rows.sort_by(|a, b| a.0.kd.total_cmp(&b.0.kd));
    Ok(rows)
}

fn velocity_plot(title: &str, runs: &[(String, &WalkingRun)]) -> Plot {
    let mut plot = Plot::new(title, "t (s)", "step mean velocity (m/s)");
    for (i, (label, run)) in runs.iter().enumerate() {
        let pts = run
            .steps
            .iter()
            .map(|s| (s.t_start, s.mean_velocity))
            .collect();
        plot.add(Series::line(label.clone(), pts, PALETTE[i % PALETTE.len()]));
    }
    if let Some((_, run)) = runs.first() {
        let pts = run
            .steps
            .iter()
            .map(|s| (s.t_start, s.desired_velocity))
            .collect();
        plot.add(Series::line("desired", pts, "#555555").dashed());
    }
    plot
}

#[derive(Debug, Clone, Serialize)]
pub struct AslipRunOutput {
    pub outcome: Option<WalkOutcome>,
    pub comparison: Vec<KdRow>,
}

pub fn cmd_aslip_run(config: &Config, out: &Path, seed: u64) -> Result<AslipRunOutput> {
    let mut sc = Scenario::create(out, "aslip-run", config, seed)?;
    let gait = resolve_gait(config, &mut sc)?;
    let w = &config.walking;
    if !w.kd_values.is_empty() {
        let rows = kd_comparison(&gait, config, &w.kd_values)?;
        for (i, (row, o)) in rows.iter().enumerate() {
            let mut bytes = Vec::new();
            o.run.write_steps_csv(&mut bytes)?;
            sc.write(&format!("steps_kd{i}.csv"), &bytes)?;
            match (row.diverged, row.velocity_error) {
                (false, Some(e)) => {
                    println!("kd {:+.4}: velocity error {:+.2}%", row.kd, 100.0 * e)
                }
                _ => println!(
                    "kd {:+.4}: diverged ({})",
                    row.kd,
                    row.failure.as_deref().unwrap_or("no steps")
                ),
            }
        }
        let table: Vec<KdRow> = rows.iter().map(|(r, _)| r.clone()).collect();
        sc.write_csv("raibert.csv", &table)?;
        sc.write_json("raibert.json", &table)?;
        let labelled: Vec<(String, &WalkingRun)> = rows
            .iter()
            .map(|(r, o)| (format!("kd {}", r.kd), &o.run))
            .collect();
        sc.write(
            "velocity.svg",
            velocity_plot("Raibert comparison", &labelled)
                .render()
                .as_bytes(),
        )?;
        sc.finish(config)?;
        return Ok(AslipRunOutput {
            outcome: None,
            comparison: table,
        });
    }

    let sim = w.sim_config(w.controller, w.velocity);
    sim.validate()?;
    let o = walk(&gait, &sim);
    let mut bytes = Vec::new();
    o.run.write_steps_csv(&mut bytes)?;
    sc.write("steps.csv", &bytes)?;
    let mut bytes = Vec::new();
    o.run.write_trajectory_csv(&mut bytes)?;
    sc.write("trajectory.csv", &bytes)?;
    sc.write_json("summary.json", &(&o.summary, &o.failure))?;
    sc.write(
        "velocity.svg",
        velocity_plot("Walking velocity", &[("measured".into(), &o.run)])
            .render()
            .as_bytes(),
    )?;
    sc.finish(config)?;
    if let Some(s) = o.summary {
        println!(
            "{} steps: velocity {:.4} m/s (error {:+.2}%), T_SSP {:.4} s, step length {:.4} m",
            s.steps,
            s.velocity,
            100.0 * s.velocity_error,
            s.t_ssp,
            s.step_length
        );
    }
    if let Some(f) = &o.failure {
        return Err(CliError::Numerical(format!("walking failed: {f}")));
    }
    Ok(AslipRunOutput {
        outcome: Some(o),
        comparison: Vec::new(),
    })
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub desired_velocity: f64,
    pub diverged: bool,
    pub steps: usize,
    pub velocity: Option<f64>,
    pub velocity_error: Option<f64>,
    pub t_ssp: Option<f64>,
    pub t_dsp: Option<f64>,
    pub step_length: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failed: Vec<f64>,
    pub max_abs_velocity_error: f64,
    pub all_within_10_percent: bool,
    pub t_ssp_non_increasing: bool,
    pub step_length_non_decreasing: bool,
}

impl SweepReport {
    fn from_rows(rows: Vec<SweepRow>) -> Self {
        let failed: Vec<f64> = rows
            .iter()
            .filter(|r| r.velocity_error.is_none() || r.diverged)
            .map(|r| r.desired_velocity)
            .collect();
        let errors: Vec<f64> = rows.iter().filter_map(|r| r.velocity_error).collect();
        let max_abs = errors.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let col =
            |f: fn(&SweepRow) -> Option<f64>| rows.iter().map(f).collect::<Option<Vec<f64>>>();
        let monotone = |v: Option<Vec<f64>>, up: bool| {
            v.is_some_and(|v| {
                v.windows(2)
                    .all(|w| if up { w[1] >= w[0] } else { w[1] <= w[0] })
            })
        };
        Self {
            all_within_10_percent: failed.is_empty() && max_abs <= 0.1,
            t_ssp_non_increasing: failed.is_empty() && monotone(col(|r| r.t_ssp), false),
            step_length_non_decreasing: failed.is_empty() && monotone(col(|r| r.step_length), true),
            max_abs_velocity_error: max_abs,
            failed,
            rows,
        }
    }
}

pub fn sweep(gait: &Gait, config: &Config) -> Result<SweepReport> {
    let w = &config.walking;
    let mut rows: Vec<SweepRow> = pool(config.sweep.workers)?.install(|| {
        config
            .sweep
            .velocities
            .par_iter()
            .map(|&v| {
                let sim = SimConfig {
                    dump_every: 0,
                    ..w.sim_config(w.controller, v)
                };
                let o = walk(gait, &sim);
                SweepRow {
                    desired_velocity: v,
                    diverged: o.diverged(),
                    steps: o.run.steps.len(),
                    velocity: o.summary.map(|s| s.velocity),
                    velocity_error: o.summary.map(|s| s.velocity_error),
                    t_ssp: o.summary.map(|s| s.t_ssp),
                    t_dsp: o.summary.map(|s| s.t_dsp),
                    step_length: o.summary.map(|s| s.step_length),
                    failure: o.failure,
                }
            })
            .collect()
    });
    rows.sort_by(|a, b| a.desired_velocity.total_cmp(&b.desired_velocity));
    Ok(SweepReport::from_rows(rows))
}

pub fn cmd_sweep(config: &Config, out: &Path, seed: u64) -> Result<SweepReport> {
    let mut sc = Scenario::create(out, "sweep", config, seed)?;
    let gait = resolve_gait(config, &mut sc)?;
    let report = sweep(&gait, config)?;
    sc.write_csv("sweep.csv", &report.rows)?;
    sc.write_json("sweep.json", &report)?;
    let pts = |f: fn(&SweepRow) -> Option<f64>, k: f64| {
        report
            .rows
            .iter()
            .filter_map(|r| f(r).map(|y| (r.desired_velocity, k * y)))
            .collect::<Vec<_>>()
    };
    let mut err = Plot::new(
        "Converged velocity error",
        "desired velocity (m/s)",
        "error (%)",
    );
    err.add(Series::line(
        "error",
        pts(|r| r.velocity_error, 100.0),
        PALETTE[0],
    ));
    err.add(Series::line("", pts(|r| r.velocity_error, 100.0), PALETTE[0]).markers());
    sc.write("sweep_error.svg", err.render().as_bytes())?;
    let mut gait_plot = Plot::new(
        "Converged step",
        "desired velocity (m/s)",
        "T_SSP (s), step length (m)",
    );
    gait_plot.add(Series::line("T_SSP", pts(|r| r.t_ssp, 1.0), PALETTE[1]));
    gait_plot.add(Series::line(
        "step length",
        pts(|r| r.step_length, 1.0),
        PALETTE[2],
    ));
    sc.write("sweep_step.svg", gait_plot.render().as_bytes())?;
    sc.finish(config)?;
    for r in &report.rows {
        match (r.velocity_error, r.t_ssp, r.step_length) {
            (Some(e), Some(t), Some(l)) if !r.diverged => {
                println!(
                    "v {:.2}: error {:+.2}%, T_SSP {:.4} s, step length {:.4} m",
                    r.desired_velocity,
                    100.0 * e,
                    t,
                    l
                )
            }
            _ => println!(
                "v {:.2}: FAILED ({})",
                r.desired_velocity,
                r.failure.as_deref().unwrap_or("no steps")
            ),
        }
    }
    println!(
        "max |error| {:.2}%, T_SSP non-increasing {}, step length non-decreasing {}",
        100.0 * report.max_abs_velocity_error,
        report.t_ssp_non_increasing,
        report.step_length_non_decreasing
    );
    Ok(report)
}

// ------------------------------------------------------------ compose3d

#[derive(Debug, Clone, Serialize)]
pub struct PlaneResult {
    pub spec: PlaneSpec,
    pub initial: PlanarState,
    pub converged_velocity: Option<f64>,
    /// First step from which both errors stay within 1e-6.
    pub settling_step: Option<usize>,
    pub log: RolloutLog,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComposeOutput {
    pub category: Category,
    pub sagittal: PlaneResult,
    pub coronal: PlaneResult,
}

/// Stepping-in-place state of the same orbit family: the origin for P1,
/// the zero-velocity P2 boundary otherwise.
pub fn in_place_start(spec: &PlaneSpec, params: hlip::HlipParams) -> Result<PlanarState> {
    Ok(match spec.kind {
        hlip::OrbitKind::P1 => PlanarState::ORIGIN,
        hlip::OrbitKind::P2 => P2Orbit::new(0.0, spec.x_boundary, params)?.preimpact_left,
    })
}

pub fn compose3d(config: &Config) -> Result<ComposeOutput> {
    let c = &config.compose3d;
    if c.steps == 0 {
        return Err(CliError::Usage("compose3d needs at least one step".into()));
    }
    let comp = compose_3d(&c.sagittal, &c.coronal, config.hlip)?;
    let initial = (
        in_place_start(&c.sagittal, config.hlip)?,
        in_place_start(&c.coronal, config.hlip)?,
    );
    let r = rollout_3d(&comp, initial, optimal_gains(&comp)?, c.steps)?;
    let plane = |spec: PlaneSpec, start: PlanarState, log: RolloutLog, orbit: &Orbit| PlaneResult {
        spec,
        initial: start,
        converged_velocity: converged_velocity(&log, orbit),
        settling_step: settling_step(&log, 1e-6),
        log,
    };
    Ok(ComposeOutput {
        category: comp.category,
        sagittal: plane(c.sagittal, initial.0, r.sagittal, &comp.sagittal),
        coronal: plane(c.coronal, initial.1, r.coronal, &comp.coronal),
    })
}

#[derive(Serialize)]
struct ComposeRow<'a> {
    plane: &'a str,
    step: usize,
    x: f64,
    xdot: f64,
    l_cmd: f64,
    ev: f64,
    ex: f64,
}

pub fn cmd_compose3d(config: &Config, out: &Path, seed: u64) -> Result<ComposeOutput> {
    let result = compose3d(config)?;
    let mut sc = Scenario::create(out, "compose3d", config, seed)?;
    let mut rows = Vec::new();
    for (name, p) in [("sagittal", &result.sagittal), ("coronal", &result.coronal)] {
        rows.extend(p.log.records.iter().map(|r| ComposeRow {
            plane: name,
            step: r.step,
            x: r.x,
            xdot: r.xdot,
            l_cmd: r.l_cmd,
            ev: r.ev,
            ex: r.ex,
        }));
        let orbit = p.spec.build(config.hlip)?;
        let lambda = config.hlip.lambda()?;
        let branches = orbit_branches(&orbit, config.orbit.arc_dt)?;
        let mut plot = phase_portrait(
            &format!("{} plane, {}", name, result.category),
            &orbit,
            &branches,
            lambda,
        )?;
        let pre = p.log.records.iter().map(|r| (r.x, r.xdot)).collect();
        plot.add(Series::line("pre-impact states", pre, "#000000").markers());
        sc.write(&format!("{name}.svg"), plot.render().as_bytes())?;
        println!(
            "{}: {} velocity {} settled at step {}",
            result.category,
            name,
            p.converged_velocity
                .map_or("n/a".into(), |v| format!("{v:.9}")),
            p.settling_step.map_or("never".into(), |s| s.to_string())
        );
    }
    sc.write_csv("rollout3d.csv", &rows)?;
    sc.write_json("summary.json", &result)?;
    sc.finish(config)?;
    Ok(result)
}
