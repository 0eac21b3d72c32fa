//! `hlip` command-line scenarios. Each subcommand resolves a [`Config`]
//! from an optional TOML file plus flags, runs, and writes CSV/JSON/SVG
//! outputs with a manifest into `<out>/<name>/`.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::path::PathBuf;

use aslip::sim::ControllerKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hlip::{OrbitKind, PlaneSpec};

pub use config::Config;
pub use error::{CliError, Result};

use config::{parse_plane, GainSpec, Schedule, Values};

#[derive(Debug, Parser)]
#[command(
    name = "hlip",
    version,
    about = "H-LIP orbits, stepping stabilization and aSLIP walking scenarios"
)]
pub struct Cli {
    /// TOML scenario file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for random initial states.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a period-1 or period-2 orbit and plot its phase portrait.
    Orbit(OrbitArgs),
    /// Roll out the stepping controller from random initial states.
    Stabilize(StabilizeArgs),
    /// Optimize the aSLIP stepping-in-place gait and replay it open loop.
    Gaitopt(GaitoptArgs),
    /// Simulate aSLIP walking under one controller.
    AslipRun(AslipRunArgs),
    /// Walk at a list of desired velocities and report converged metrics.
    Sweep(SweepArgs),
    /// Compose sagittal and coronal orbits and roll out both planes.
    Compose3d(ComposeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    P1,
    P2,
}

impl From<KindArg> for OrbitKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::P1 => OrbitKind::P1,
            KindArg::P2 => OrbitKind::P2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ControllerArg {
    P1,
    P2,
    Raibert,
    Fixed,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[arg(long)]
    pub kind: Option<KindArg>,
    /// Desired net velocity (m/s).
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// P2 boundary position (m).
    #[arg(long, allow_hyphen_values = true)]
    pub xb: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StabilizeArgs {
    #[arg(long)]
    pub kind: Option<KindArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xb: Option<f64>,
    /// Number of random initial states.
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// `optimal` or a gain value (s).
    #[arg(long, allow_hyphen_values = true)]
    pub gain: Option<GainSpec>,
    /// Multiples of the optimal gain, `a,b,c` or `lo..hi[:n]`.
    #[arg(long, allow_hyphen_values = true)]
    pub gain_grid: Option<Values>,
}

#[derive(Debug, Args)]
pub struct GaitoptArgs {
    /// Collocation intervals in single support.
    #[arg(long)]
    pub ssp_intervals: Option<usize>,
    /// Collocation intervals in double support.
    #[arg(long)]
    pub dsp_intervals: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AslipRunArgs {
    /// Gait file; optimized afresh when absent.
    #[arg(long)]
    pub gait: Option<PathBuf>,
    #[arg(long)]
    pub controller: Option<ControllerArg>,
    /// Desired velocity (m/s).
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// P2 boundary position (m).
    #[arg(long, allow_hyphen_values = true)]
    pub xb: Option<f64>,
    /// Raibert derivative gain(s); several values run a comparison.
    #[arg(long, allow_hyphen_values = true)]
    pub kd: Option<Values>,
    /// Step length of the fixed-step controller (m).
    #[arg(long, allow_hyphen_values = true)]
    pub step_length: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Ramp the desired velocity from zero over this many seconds.
    #[arg(long, conflicts_with_all = ["step_at", "constant"])]
    pub ramp: Option<f64>,
    /// Switch the desired velocity on at this time (s).
    #[arg(long, conflicts_with = "constant")]
    pub step_at: Option<f64>,
    /// Desired velocity from the start.
    #[arg(long)]
    pub constant: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub gait: Option<PathBuf>,
    /// `a,b,c` or `lo..hi[:n]`.
    #[arg(long, allow_hyphen_values = true)]
    pub velocities: Option<Values>,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// `p1:<v>` or `p2:<v>:<x_boundary>`.
    #[arg(long, value_parser = parse_plane, allow_hyphen_values = true)]
    pub sagittal: Option<PlaneSpec>,
    #[arg(long, value_parser = parse_plane, allow_hyphen_values = true)]
    pub coronal: Option<PlaneSpec>,
    #[arg(long)]
    pub steps: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Command {
    /// Writes the flag values over `cfg`.
    pub fn apply(&self, cfg: &mut Config) -> Result<()> {
        match self {
            Command::Orbit(a) => {
                set(&mut cfg.orbit.kind, a.kind.map(Into::into));
                set(&mut cfg.orbit.velocity, a.v);
                set(&mut cfg.orbit.x_boundary, a.xb);
            }
            Command::Stabilize(a) => {
                let s = &mut cfg.stabilize;
                set(&mut s.kind, a.kind.map(Into::into));
                set(&mut s.velocity, a.v);
                set(&mut s.x_boundary, a.xb);
                set(&mut s.initial_states, a.states);
                set(&mut s.steps, a.steps);
                if let Some(g) = a.gain {
                    s.gain = g;
                    s.gain_grid.clear();
                }
                set(&mut s.gain_grid, a.gain_grid.clone().map(|v| v.0));
            }
            Command::Gaitopt(a) => {
                set(&mut cfg.gait.options.ssp_intervals, a.ssp_intervals);
                set(&mut cfg.gait.options.dsp_intervals, a.dsp_intervals);
            }
            Command::AslipRun(a) => {
                if a.gait.is_some() {
                    cfg.gait.file = a.gait.clone();
                }
                let w = &mut cfg.walking;
                set(&mut w.velocity, a.v);
                set(&mut w.steps, a.steps);
                if let Some(d) = a.ramp {
                    w.schedule = Schedule::Ramp {
                        duration: d,
                        increments: ramp_increments(&w.schedule),
                    };
                }
                if let Some(at) = a.step_at {
                    w.schedule = Schedule::Step { at };
                }
                if a.constant {
                    w.schedule = Schedule::Constant;
                }
                let xb = a.xb.or(match w.controller {
                    ControllerKind::HlipP2 { x_boundary } => Some(x_boundary),
                    _ => None,
                });
                let kd = a.kd.clone().map(|v| v.0).unwrap_or_default();
                let controller = match a.controller {
                    None if kd.is_empty() => None,
                    None | Some(ControllerArg::Raibert) => Some(ControllerArg::Raibert),
                    other => other,
                };
                match controller {
                    None => {
                        if a.xb.is_some() {
                            if let ControllerKind::HlipP2 { x_boundary } = &mut w.controller {
                                *x_boundary = a.xb.unwrap_or(*x_boundary);
                            }
                        }
                    }
                    Some(ControllerArg::P1) => w.controller = ControllerKind::HlipP1,
                    Some(ControllerArg::P2) => {
                        w.controller = ControllerKind::HlipP2 {
                            x_boundary: xb.unwrap_or(cfg.orbit.x_boundary),
                        }
                    }
                    Some(ControllerArg::Fixed) => {
                        let step_length = a.step_length.ok_or_else(|| {
                            CliError::Usage("--controller fixed needs --step-length".into())
                        })?;
                        w.controller = ControllerKind::Fixed { step_length };
                    }
                    Some(ControllerArg::Raibert) => match kd.as_slice() {
                        [] => {
                            let kd = match w.controller {
                                ControllerKind::Raibert { kd } => kd,
                                _ => 0.0,
                            };
                            w.controller = ControllerKind::Raibert { kd };
                        }
                        [kd] => {
                            w.controller = ControllerKind::Raibert { kd: *kd };
                            w.kd_values.clear();
                        }
                        many => w.kd_values = many.to_vec(),
                    },
                }
            }
            Command::Sweep(a) => {
                if a.gait.is_some() {
                    cfg.gait.file = a.gait.clone();
                }
                set(&mut cfg.sweep.velocities, a.velocities.clone().map(|v| v.0));
                set(&mut cfg.sweep.workers, a.workers);
                set(&mut cfg.walking.steps, a.steps);
            }
            Command::Compose3d(a) => {
                set(&mut cfg.compose3d.sagittal, a.sagittal);
                set(&mut cfg.compose3d.coronal, a.coronal);
                set(&mut cfg.compose3d.steps, a.steps);
            }
        }
        Ok(())
    }
}

fn ramp_increments(s: &Schedule) -> usize {
    match s {
        Schedule::Ramp { increments, .. } => *increments,
        _ => 10,
    }
}

impl Cli {
    /// Config file (or defaults) with this invocation's flags applied.
    pub fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        self.command.apply(&mut cfg)?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve()?;
    let (out, seed) = (cli.out.as_path(), cli.seed);
    match cli.command {
        Command::Orbit(_) => commands::cmd_orbit(&cfg, out, seed).map(drop),
        Command::Stabilize(_) => commands::cmd_stabilize(&cfg, out, seed).map(drop),
        Command::Gaitopt(_) => commands::cmd_gaitopt(&cfg, out, seed).map(drop),
        Command::AslipRun(_) => commands::cmd_aslip_run(&cfg, out, seed).map(drop),
        Command::Sweep(_) => commands::cmd_sweep(&cfg, out, seed).map(drop),
        Command::Compose3d(_) => commands::cmd_compose3d(&cfg, out, seed).map(drop),
    }
}
