//! Actuated spring-loaded inverted pendulum (aSLIP) walking.
//!
//! [`model`] holds the single- and double-support dynamics and transition
//! maps, [`integrate`] the fixed-step integrator with guard localization,
//! [`sim`] the walking simulator driven by H-LIP stepping, and [`gaitopt`]
//! the collocation optimizer that produces the stepping-in-place gait.

pub mod control;
pub mod error;
pub mod gait;
pub mod gaitopt;
pub mod integrate;
pub mod model;
pub mod nlp;
pub mod params;
pub mod sim;

pub use error::{AslipError, Result};
pub use model::{
    dsp_dynamics, impact_ssp_to_dsp, ssp_dynamics, transition_dsp_to_ssp, AslipStateDsp,
    AslipStateSsp, DspAccel, LegState, SspAccel,
};
pub use params::{spring_force, AslipParams};
