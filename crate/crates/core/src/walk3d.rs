//! Decoupled sagittal/coronal H-LIP walking for a composed 3D orbit.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::PlanarState;
use crate::orbits::{Category, Composition3D, Orbit, StanceLeg};
use crate::stepping::{optimal_gain, rollout, RolloutLog, SteppingGain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout3D {
    pub category: Category,
    pub sagittal: RolloutLog,
    pub coronal: RolloutLog,
}

/// Per-plane deadbeat gains. Both come from the shared parameters.
pub fn optimal_gains(comp: &Composition3D) -> Result<(SteppingGain, SteppingGain)> {
    Ok((
        optimal_gain(comp.sagittal.params())?,
        optimal_gain(comp.coronal.params())?,
    ))
}

/// Walks both planes for `n_steps`. The planes share the stance sequence,
/// which starts on the left leg.
pub fn rollout_3d(
    comp: &Composition3D,
    initial: (PlanarState, PlanarState),
    gains: (SteppingGain, SteppingGain),
    n_steps: usize,
) -> Result<Rollout3D> {
    Ok(Rollout3D {
        category: comp.category,
        sagittal: rollout(initial.0, &comp.sagittal, gains.0, n_steps, StanceLeg::Left)?,
        coronal: rollout(initial.1, &comp.coronal, gains.1, n_steps, StanceLeg::Left)?,
    })
}

/// First step index from which every later record is within `tol` of the
/// orbit in both velocity and position, or `None` if the log never settles.
pub fn settling_step(log: &RolloutLog, tol: f64) -> Option<usize> {
    let mut settled = None;
    for r in &log.records {
        let ok = r.ev.abs() <= tol && r.ex.abs() <= tol;
        match (ok, settled) {
            (true, None) => settled = Some(r.step),
            (false, _) => settled = None,
            _ => {}
        }
    }
    settled
}

/// Mean velocity over the last full orbit period in the log.
pub fn converged_velocity(log: &RolloutLog, orbit: &Orbit) -> Option<f64> {
    let v = log.step_velocities(orbit.params());
    let n = orbit.period_steps();
    if v.len() < n {
        return None;
    }
    Some(v[v.len() - n..].iter().sum::<f64>() / n as f64)
}
