//! Hybrid linear inverted pendulum (H-LIP) toolkit.
//!
//! * [`model`]: closed-form SSP/DSP flows, impact maps and the step-to-step map.
//! * [`orbits`]: Period-1 / Period-2 orbit construction and 3D composition.
//! * [`stepping`]: gain synthesis and closed-loop step-length control.
//! * [`walk3d`]: decoupled two-plane rollouts of composed orbits.

pub mod error;
pub mod model;
pub mod orbits;
pub mod stepping;
pub mod walk3d;

pub use error::{HlipError, Result};
pub use model::{
    dsp_flow, impact_d2s, impact_s2d, orbital_energy, sample_ssp_arc, ssp_flow, step_map,
    step_map_traced, FlowCoefficients, HlipParams, PlanarState, Transition, TransitionEvent,
};
pub use orbits::{
    compose_3d, d2_for_velocity, p1_boundary_velocity, p1_nominal_step_length,
    p2_nominal_step_length, sigma1, sigma2, verify_orbit, Category, Composition3D, Orbit,
    OrbitKind, OrbitReport, OrbitalLine, P1Orbit, P2Orbit, PlaneSpec, StanceLeg,
};
pub use stepping::{
    contraction_factor, gain_range, optimal_gain, p1_step_length, p2_step_length, position_factor,
    rollout, step_length, RolloutLog, RolloutRecord, SteppingGain,
};
