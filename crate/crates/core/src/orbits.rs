//! Period-1 and Period-2 orbits of the H-LIP and their 3D composition.
//!
//! Pre-impact states of P1 orbits lie on `ẋ = σ₁x`, post-impact states on
//! `ẋ = −σ₁x`. P2 orbits use `ẋ = ±σ₂x + d₂` instead, where the offset `d₂`
//! fixes the net velocity and any point on the line picks one member of an
//! infinite family.
//!
//! P2 orbits are parameterized here by the pre-impact position of the left
//! stance leg. Their boundary velocities are read off the constructed orbit
//! (one application of the step map) rather than from a closed form.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{orbital_energy, step_map, HlipParams, PlanarState};

/// The line `ẋ = slope·x + offset` in the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalLine {
    pub slope: f64,
    pub offset: f64,
}

impl OrbitalLine {
    pub fn residual(&self, state: PlanarState) -> f64 {
        state.xdot - self.slope * state.x - self.offset
    }

    pub fn point_at(&self, x: f64) -> PlanarState {
        PlanarState::new(x, self.slope * x + self.offset)
    }
}

/// Orbital slope of P1 orbits, `λ·coth(λ·T_SSP/2)`.
pub fn sigma1(params: &HlipParams) -> Result<f64> {
    params.require_positive_ssp("sigma1 (coth)")?;
    let lambda = params.lambda()?;
    Ok(lambda / (0.5 * lambda * params.t_ssp).tanh())
}

/// Orbital slope of P2 orbits, `λ·tanh(λ·T_SSP/2)`.
pub fn sigma2(params: &HlipParams) -> Result<f64> {
    let lambda = params.lambda()?;
    Ok(lambda * (0.5 * lambda * params.t_ssp).tanh())
}

/// Pre-impact velocity of the unique P1 orbit with net velocity `v_desired`.
pub fn p1_boundary_velocity(v_desired: f64, params: &HlipParams) -> Result<f64> {
    let s1 = sigma1(params)?;
    Ok(v_desired * params.step_period() / (2.0 / s1 + params.t_dsp))
}

/// Step length that closes a P1 orbit from this pre-impact state:
/// `x⁻ + ẋ⁻·T_DSP + ẋ⁻/σ₁`.
pub fn p1_nominal_step_length(preimpact: PlanarState, params: &HlipParams) -> Result<f64> {
    let s1 = sigma1(params)?;
    Ok(preimpact.x + preimpact.xdot * params.t_dsp + preimpact.xdot / s1)
}

/// Offset of the P2 orbital lines for net velocity `v_desired`:
/// `λ²·sech²(λT_SSP/2)·(T_SSP + T_DSP)·v / (λ²T_DSP + 2σ₂)`.
///
/// Over one SSP arc starting on `ẋ = −σ₂x + d₂` the mass travels
/// `d₂·sinh(λT_SSP)/λ` and the boundary velocities sum to
/// `2d₂·cosh²(λT_SSP/2)`, independent of the starting point; equating two
/// steps of travel to `2(T_SSP + T_DSP)·v` gives the squared secant.
pub fn d2_for_velocity(v_desired: f64, params: &HlipParams) -> Result<f64> {
    let lambda = params.lambda()?;
    let half = 0.5 * lambda * params.t_ssp;
    let s2 = sigma2(params)?;
    let lambda_sq = lambda * lambda;
    let sech = 1.0 / half.cosh();
    Ok(lambda_sq * sech * sech * params.step_period() * v_desired
        / (lambda_sq * params.t_dsp + 2.0 * s2))
}

/// Step length of a P2 orbit from this pre-impact state:
/// `x⁻ + T_DSP·ẋ⁻ + (ẋ⁻ − d₂)/σ₂`.
pub fn p2_nominal_step_length(preimpact: PlanarState, d2: f64, params: &HlipParams) -> Result<f64> {
    let s2 = sigma2(params)?;
    Ok(preimpact.x + params.t_dsp * preimpact.xdot + (preimpact.xdot - d2) / s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Orbit {
    pub params: HlipParams,
    pub preimpact: PlanarState,
    pub step_length: f64,
    pub net_velocity: f64,
}

impl P1Orbit {
    pub fn new(v_desired: f64, params: HlipParams) -> Result<Self> {
        let xdot = p1_boundary_velocity(v_desired, &params)?;
        let s1 = sigma1(&params)?;
        let preimpact = PlanarState::new(xdot / s1, xdot);
        let step_length = p1_nominal_step_length(preimpact, &params)?;
        Ok(Self {
            params,
            preimpact,
            step_length,
            net_velocity: v_desired,
        })
    }

    /// Post-impact line `ẋ = −σ₁x` and pre-impact line `ẋ = σ₁x`.
    pub fn orbital_lines(&self) -> Result<[OrbitalLine; 2]> {
        let s1 = sigma1(&self.params)?;
        Ok([
            OrbitalLine {
                slope: -s1,
                offset: 0.0,
            },
            OrbitalLine {
                slope: s1,
                offset: 0.0,
            },
        ])
    }

    /// State at the start of single support.
    pub fn ssp_initial(&self) -> PlanarState {
        PlanarState::new(
            self.preimpact.x + self.preimpact.xdot * self.params.t_dsp - self.step_length,
            self.preimpact.xdot,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StanceLeg {
    Left,
    Right,
}

impl StanceLeg {
    pub fn other(self) -> Self {
        match self {
            StanceLeg::Left => StanceLeg::Right,
            StanceLeg::Right => StanceLeg::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2Orbit {
    pub params: HlipParams,
    pub preimpact_left: PlanarState,
    pub preimpact_right: PlanarState,
    pub step_length_left: f64,
    pub step_length_right: f64,
    pub offset_d2: f64,
    pub net_velocity: f64,
}

impl P2Orbit {
    /// `x_boundary` is the pre-impact position with the left leg in stance.
    pub fn new(v_desired: f64, x_boundary: f64, params: HlipParams) -> Result<Self> {
        let d2 = d2_for_velocity(v_desired, &params)?;
        let s2 = sigma2(&params)?;
        let preimpact_left = PlanarState::new(x_boundary, s2 * x_boundary + d2);
        let step_length_left = p2_nominal_step_length(preimpact_left, d2, &params)?;
        let preimpact_right = step_map(preimpact_left, step_length_left, &params)?;
        let step_length_right = p2_nominal_step_length(preimpact_right, d2, &params)?;
        Ok(Self {
            params,
            preimpact_left,
            preimpact_right,
            step_length_left,
            step_length_right,
            offset_d2: d2,
            net_velocity: v_desired,
        })
    }

    pub fn preimpact(&self, stance: StanceLeg) -> PlanarState {
        match stance {
            StanceLeg::Left => self.preimpact_left,
            StanceLeg::Right => self.preimpact_right,
        }
    }

    pub fn step_length(&self, stance: StanceLeg) -> f64 {
        match stance {
            StanceLeg::Left => self.step_length_left,
            StanceLeg::Right => self.step_length_right,
        }
    }

    /// Post-impact line `ẋ = −σ₂x + d₂` and pre-impact line `ẋ = σ₂x + d₂`.
    pub fn orbital_lines(&self) -> Result<[OrbitalLine; 2]> {
        let s2 = sigma2(&self.params)?;
        Ok([
            OrbitalLine {
                slope: -s2,
                offset: self.offset_d2,
            },
            OrbitalLine {
                slope: s2,
                offset: self.offset_d2,
            },
        ])
    }

    /// State at the start of single support with `stance` on the ground.
    pub fn ssp_initial(&self, stance: StanceLeg) -> PlanarState {
        let prev = self.preimpact(stance.other());
        PlanarState::new(
            prev.x + prev.xdot * self.params.t_dsp - self.step_length(stance.other()),
            prev.xdot,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitKind {
    #[serde(alias = "p1")]
    P1,
    #[serde(alias = "p2")]
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Orbit {
    P1(P1Orbit),
    P2(P2Orbit),
}

impl Orbit {
    pub fn kind(&self) -> OrbitKind {
        match self {
            Orbit::P1(_) => OrbitKind::P1,
            Orbit::P2(_) => OrbitKind::P2,
        }
    }

    pub fn params(&self) -> &HlipParams {
        match self {
            Orbit::P1(o) => &o.params,
            Orbit::P2(o) => &o.params,
        }
    }

    pub fn net_velocity(&self) -> f64 {
        match self {
            Orbit::P1(o) => o.net_velocity,
            Orbit::P2(o) => o.net_velocity,
        }
    }

    /// Target pre-impact state when `stance` is on the ground.
    pub fn target(&self, stance: StanceLeg) -> PlanarState {
        match self {
            Orbit::P1(o) => o.preimpact,
            Orbit::P2(o) => o.preimpact(stance),
        }
    }

    pub fn nominal_step_length(&self, stance: StanceLeg) -> f64 {
        match self {
            Orbit::P1(o) => o.step_length,
            Orbit::P2(o) => o.step_length(stance),
        }
    }

    pub fn orbital_lines(&self) -> Result<[OrbitalLine; 2]> {
        match self {
            Orbit::P1(o) => o.orbital_lines(),
            Orbit::P2(o) => o.orbital_lines(),
        }
    }

    pub fn period_steps(&self) -> usize {
        match self {
            Orbit::P1(_) => 1,
            Orbit::P2(_) => 2,
        }
    }
}

/// Numerical witness that an orbit is periodic with the advertised velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    /// Largest state mismatch after one period of the step map.
    pub closure_residual: f64,
    /// Travelled distance over one period divided by its duration.
    pub measured_net_velocity: f64,
    /// Sign (−1, 0, 1) of the orbital energy at the start of single support
    /// (left stance for P2).
    pub energy_sign: i8,
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn verify_orbit(orbit: &Orbit) -> Result<OrbitReport> {
    let params = orbit.params();
    let (start, legs): (PlanarState, &[(PlanarState, f64)]) = match orbit {
        Orbit::P1(o) => (o.preimpact, &[(o.preimpact, o.step_length)][..]),
        Orbit::P2(o) => (
            o.preimpact_left,
            &[
                (o.preimpact_left, o.step_length_left),
                (o.preimpact_right, o.step_length_right),
            ][..],
        ),
    };
    // Mass displacement between consecutive pre-impact instants is
    // l + x⁻(next) − x⁻(current).
    let mut state = start;
    let mut distance = 0.0;
    let mut closure: f64 = 0.0;
    for (i, &(target, _)) in legs.iter().enumerate() {
        closure = closure.max(state.max_abs_diff(&target));
        let length = legs[i].1;
        let next = step_map(state, length, params)?;
        distance += length + next.x - state.x;
        state = next;
    }
    closure = closure.max(state.max_abs_diff(&start));
    let duration = legs.len() as f64 * params.step_period();

    let ssp_start = match orbit {
        Orbit::P1(o) => o.ssp_initial(),
        Orbit::P2(o) => o.ssp_initial(StanceLeg::Left),
    };
    Ok(OrbitReport {
        closure_residual: closure,
        measured_net_velocity: distance / duration,
        energy_sign: sign_of(orbital_energy(ssp_start, params)?),
    })
}

/// Orbit request for a single plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub kind: OrbitKind,
    pub velocity: f64,
    /// Left-stance pre-impact position; only read for P2.
    #[serde(default)]
    pub x_boundary: f64,
}

impl PlaneSpec {
    pub fn p1(velocity: f64) -> Self {
        Self {
            kind: OrbitKind::P1,
            velocity,
            x_boundary: 0.0,
        }
    }

    pub fn p2(velocity: f64, x_boundary: f64) -> Self {
        Self {
            kind: OrbitKind::P2,
            velocity,
            x_boundary,
        }
    }

    pub fn build(&self, params: HlipParams) -> Result<Orbit> {
        Ok(match self.kind {
            OrbitKind::P1 => Orbit::P1(P1Orbit::new(self.velocity, params)?),
            OrbitKind::P2 => Orbit::P2(P2Orbit::new(self.velocity, self.x_boundary, params)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "sP1-cP1")]
    SP1CP1,
    #[serde(rename = "sP1-cP2")]
    SP1CP2,
    #[serde(rename = "sP2-cP1")]
    SP2CP1,
    #[serde(rename = "sP2-cP2")]
    SP2CP2,
}

impl Category {
    pub fn from_kinds(sagittal: OrbitKind, coronal: OrbitKind) -> Self {
        match (sagittal, coronal) {
            (OrbitKind::P1, OrbitKind::P1) => Category::SP1CP1,
            (OrbitKind::P1, OrbitKind::P2) => Category::SP1CP2,
            (OrbitKind::P2, OrbitKind::P1) => Category::SP2CP1,
            (OrbitKind::P2, OrbitKind::P2) => Category::SP2CP2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Category::SP1CP1 => "sP1-cP1",
            Category::SP1CP2 => "sP1-cP2",
            Category::SP2CP1 => "sP2-cP1",
            Category::SP2CP2 => "sP2-cP2",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A sagittal and a coronal orbit walked simultaneously. The planes share
/// the H-LIP parameters but are otherwise decoupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Composition3D {
    pub sagittal: Orbit,
    pub coronal: Orbit,
    pub category: Category,
}

pub fn compose_3d(
    sagittal: &PlaneSpec,
    coronal: &PlaneSpec,
    params: HlipParams,
) -> Result<Composition3D> {
    let sagittal = sagittal.build(params)?;
    let coronal = coronal.build(params)?;
    Ok(Composition3D {
        category: Category::from_kinds(sagittal.kind(), coronal.kind()),
        sagittal,
        coronal,
    })
}
