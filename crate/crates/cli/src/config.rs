//! Scenario configuration. Files are TOML; every section and field is
//! optional and falls back to the defaults below. Command-line flags
//! override file values.
//!
//! ```toml
//! name = "demo"                 # output subdirectory; defaults to the command
//!
//! [hlip]                        # H-LIP used by orbit, stabilize, compose3d
//! g = 9.81
//! z0 = 1.0
//! t_ssp = 0.4
//! t_dsp = 0.1
//!
//! [orbit]
//! kind = "P1"                   # P1 | P2
//! velocity = 0.2
//! x_boundary = -0.05            # P2 only
//! arc_dt = 0.005
//!
//! [stabilize]
//! kind = "P1"
//! velocity = 0.3
//! x_boundary = -0.05
//! initial_states = 3            # drawn from x in [-0.5, 0.5] m, xdot in [-1, 1] m/s
//! steps = 10
//! gain = "optimal"              # or a number (s)
//! gain_grid = [0.5, 1.0, 1.5]   # multiples of the optimal gain; replaces `gain`
//!
//! [gait]
//! file = "gait.json"            # load instead of optimizing
//! [gait.params]                 # aSLIP parameters (mass, spring law, leg range)
//! [gait.options]                # collocation grid, bounds, tolerances
//!
//! [walking]
//! controller = { kind = "hlip_p1" }   # hlip_p2 { x_boundary }, raibert { kd }, fixed { step_length }
//! velocity = 0.3
//! schedule = { kind = "ramp", duration = 4.0, increments = 10 }  # or { kind = "constant" }, { kind = "step", at = 1.0 }
//! steps = 50
//! kd_values = []                # non-empty: Raibert comparison over these gains
//! [walking.sim]                 # integrator step, event tolerances, tracking gains
//!
//! [sweep]
//! velocities = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
//! workers = 1
//!
//! [compose3d]
//! sagittal = { kind = "P1", velocity = 0.2 }
//! coronal = { kind = "P2", velocity = 0.0, x_boundary = -0.1 }
//! steps = 10
//! ```

use std::path::{Path, PathBuf};

use aslip::gaitopt::GaitOptOptions;
use aslip::sim::{ControllerKind, SimConfig};
use aslip::AslipParams;
use hlip::{HlipParams, OrbitKind, PlaneSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Ranges random initial states are drawn from: position (m), velocity (m/s).
pub const RANDOM_X_RANGE: (f64, f64) = (-0.5, 0.5);
pub const RANDOM_XDOT_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub name: Option<String>,
    pub hlip: HlipParams,
    pub orbit: OrbitSection,
    pub stabilize: StabilizeSection,
    pub gait: GaitSection,
    pub walking: WalkingSection,
    pub sweep: SweepSection,
    pub compose3d: ComposeSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            name: None,
            hlip: HlipParams {
                g: 9.81,
                z0: 1.0,
                t_ssp: 0.4,
                t_dsp: 0.1,
            },
            orbit: OrbitSection::default(),
            stabilize: StabilizeSection::default(),
            gait: GaitSection::default(),
            walking: WalkingSection::default(),
            sweep: SweepSection::default(),
            compose3d: ComposeSection::default(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSection {
    pub kind: OrbitKind,
    pub velocity: f64,
    pub x_boundary: f64,
    /// Sample spacing of the single-support arcs in the portrait (s).
    pub arc_dt: f64,
}

impl Default for OrbitSection {
    fn default() -> Self {
        Self {
            kind: OrbitKind::P1,
            velocity: 0.2,
            x_boundary: -0.05,
            arc_dt: 0.005,
        }
    }
}

impl OrbitSection {
    pub fn plane(&self) -> PlaneSpec {
        PlaneSpec {
            kind: self.kind,
            velocity: self.velocity,
            x_boundary: self.x_boundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Named(OptimalGain),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalGain {
    Optimal,
}

impl std::str::FromStr for GainSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "optimal" {
            return Ok(GainSpec::Named(OptimalGain::Optimal));
        }
        s.parse()
            .map(GainSpec::Value)
            .map_err(|_| format!("gain must be `optimal` or a number, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilizeSection {
    pub kind: OrbitKind,
    pub velocity: f64,
    pub x_boundary: f64,
    pub initial_states: usize,
    pub steps: usize,
    pub gain: GainSpec,
    pub gain_grid: Vec<f64>,
}

impl Default for StabilizeSection {
    fn default() -> Self {
        Self {
            kind: OrbitKind::P1,
            velocity: 0.3,
            x_boundary: -0.05,
            initial_states: 3,
            steps: 10,
            gain: GainSpec::Named(OptimalGain::Optimal),
            gain_grid: Vec::new(),
        }
    }
}

impl StabilizeSection {
    pub fn plane(&self) -> PlaneSpec {
        PlaneSpec {
            kind: self.kind,
            velocity: self.velocity,
            x_boundary: self.x_boundary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitSection {
    pub file: Option<PathBuf>,
    pub params: AslipParams,
    pub options: GaitOptOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Desired velocity from the start.
    Constant,
    /// Zero, then the desired velocity from `at` seconds.
    Step { at: f64 },
    /// Equal increments from zero over `duration` seconds.
    Ramp { duration: f64, increments: usize },
}

impl Schedule {
    pub fn apply(&self, sim: SimConfig, v: f64) -> SimConfig {
        match *self {
            Schedule::Constant => sim.constant_velocity(v),
            Schedule::Step { at } => SimConfig {
                velocity_schedule: vec![(0.0, 0.0), (at, v)],
                ..sim
            },
            Schedule::Ramp {
                duration,
                increments,
            } => sim.ramped_velocity(v, duration, increments),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkingSection {
    pub controller: ControllerKind,
    pub velocity: f64,
    pub schedule: Schedule,
    pub steps: usize,
    pub kd_values: Vec<f64>,
    pub sim: SimConfig,
}

impl Default for WalkingSection {
    fn default() -> Self {
        Self {
            controller: ControllerKind::HlipP1,
            velocity: 0.3,
            schedule: Schedule::Ramp {
                duration: 4.0,
                increments: 10,
            },
            steps: 50,
            kd_values: Vec::new(),
            sim: SimConfig {
                dump_every: 10,
                ..SimConfig::default()
            },
        }
    }
}

impl WalkingSection {
    /// Simulator settings for one run at desired velocity `v`.
    pub fn sim_config(&self, controller: ControllerKind, v: f64) -> SimConfig {
        let base = SimConfig {
            controller,
            max_steps: self.steps,
            ..self.sim.clone()
        };
        self.schedule.apply(base, v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub velocities: Vec<f64>,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            velocities: (1..=9).map(|i| i as f64 / 10.0).collect(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeSection {
    pub sagittal: PlaneSpec,
    pub coronal: PlaneSpec,
    pub steps: usize,
}

impl Default for ComposeSection {
    fn default() -> Self {
        Self {
            sagittal: PlaneSpec::p1(0.2),
            coronal: PlaneSpec::p2(0.0, -0.1),
            steps: 10,
        }
    }
}

/// Parses `a,b,c` or `lo..hi` (nine points) or `lo..hi:n`.
pub fn parse_values(s: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: `{t}`"))
    };
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, n) = match rest.split_once(':') {
            Some((hi, n)) => (
                hi,
                n.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad point count `{n}`"))?,
            ),
            None => (rest, 9),
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        if n < 2 {
            return Err("a range needs at least two points".into());
        }
        let m = (n - 1) as f64;
        return Ok((0..n)
            .map(|i| (lo * (m - i as f64) + hi * i as f64) / m)
            .collect());
    }
    s.split(',').map(num).collect()
}

/// Flag value parsed by [`parse_values`].
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

impl std::str::FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_values(s).map(Values)
    }
}

/// Parses `p1:v` or `p2:v:x_boundary`.
pub fn parse_plane(s: &str) -> std::result::Result<PlaneSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("not a number: `{t}`"));
    match parts.as_slice() {
        [k, v] if k.eq_ignore_ascii_case("p1") => Ok(PlaneSpec::p1(num(v)?)),
        [k, v, xb] if k.eq_ignore_ascii_case("p2") => Ok(PlaneSpec::p2(num(v)?, num(xb)?)),
        _ => Err(format!(
            "expected `p1:<v>` or `p2:<v>:<x_boundary>`, got `{s}`"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: Config = toml::from_str("").unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"
            name = "demo"
            [hlip]
            g = 9.81
            z0 = 0.9
            t_ssp = 0.35
            t_dsp = 0.1
            [stabilize]
            gain = 0.12
            gain_grid = [0.5, 1.0]
            [walking]
            controller = { kind = "hlip_p2", x_boundary = -0.05 }
            schedule = { kind = "step", at = 1.0 }
            [walking.sim]
            dt = 5e-5
            [compose3d]
            sagittal = { kind = "p2", velocity = -0.25, x_boundary = -0.05 }
        "#;
        let c: Config = toml::from_str(text).unwrap();
        assert_eq!(c.name.as_deref(), Some("demo"));
        assert_eq!(c.stabilize.gain, GainSpec::Value(0.12));
        assert_eq!(
            c.walking.controller,
            ControllerKind::HlipP2 { x_boundary: -0.05 }
        );
        assert_eq!(c.walking.sim.dt, 5e-5);
        assert_eq!(
            c.walking.sim.event_time_tol,
            SimConfig::default().event_time_tol
        );
        assert_eq!(c.compose3d.sagittal, PlaneSpec::p2(-0.25, -0.05));
        assert!(toml::from_str::<Config>("bogus = 1").is_err());
    }

    #[test]
    fn value_lists_and_ranges() {
        assert_eq!(parse_values("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        let r = parse_values("-0.04..0.04:5").unwrap();
        for (a, b) in r.iter().zip([-0.04, -0.02, 0.0, 0.02, 0.04]) {
            assert!((a - b).abs() <= 1e-15);
        }
        assert_eq!((r[0], r[4]), (-0.04, 0.04));
        assert_eq!(parse_values("0.1..0.9").unwrap().len(), 9);
        assert!(parse_values("a..b").is_err());
        assert_eq!(
            parse_plane("p2:0.1:-0.05").unwrap(),
            PlaneSpec::p2(0.1, -0.05)
        );
        assert!(parse_plane("p3:1").is_err());
    }
}
