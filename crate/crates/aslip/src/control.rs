//! Leg-length tracking and the stepping laws used during single support.

use hlip::{Orbit, PlanarState, StanceLeg, SteppingGain};

use crate::error::Result;
use crate::gait::LegReference;

/// Feedforward plus PD on the actuator length:
/// `L̈ = L̈ᵈ − Kp (L − Lᵈ) − Kd (L̇ − L̇ᵈ)`.
pub fn leg_length_tracking(l: f64, l_dot: f64, desired: &LegReference, gains: (f64, f64)) -> f64 {
    desired.l_ddot - gains.0 * (l - desired.l) - gains.1 * (l_dot - desired.l_dot)
}

/// Half-cosine blend from 0 to 1 over `[0, blend_end]`, flat outside.
pub fn blend(t: f64, blend_end: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= blend_end {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * t / blend_end).cos())
    }
}

/// Horizontal swing-foot placement relative to the stance foot,
/// `l(t) = (1 − c(t)) l_start + c(t) l_desired`.
pub fn swing_step_construction(t_in_ssp: f64, l_start: f64, l_desired: f64, blend_end: f64) -> f64 {
    let c = blend(t_in_ssp, blend_end);
    (1.0 - c) * l_start + c * l_desired
}

/// H-LIP step length evaluated on the current mass state (relative to the
/// stance foot) as if it were the pre-impact state.
pub fn hlip_step_command(
    mass: PlanarState,
    orbit: &Orbit,
    gain: SteppingGain,
    stance: StanceLeg,
) -> Result<f64> {
    Ok(hlip::step_length(mass, orbit, stance, gain)?)
}

/// H-LIP command plus a derivative term on the mean velocities of the last
/// two completed steps, `kd (v_last − v_before)`.
pub fn raibert_augmented_command(
    mass: PlanarState,
    orbit: &Orbit,
    gain: SteppingGain,
    stance: StanceLeg,
    kd_extra: f64,
    v_last: f64,
    v_before: f64,
) -> Result<f64> {
    Ok(hlip_step_command(mass, orbit, gain, stance)? + kd_extra * (v_last - v_before))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hlip::{HlipParams, P1Orbit};

    #[test]
    fn tracking_law() {
        let d = LegReference {
            l: 0.9,
            l_dot: 0.1,
            l_ddot: -2.0,
        };
        assert_eq!(leg_length_tracking(0.9, 0.1, &d, (400.0, 40.0)), -2.0);
        assert!((leg_length_tracking(0.91, 0.1, &d, (100.0, 0.0)) - (-3.0)).abs() < 1e-12);
    }

    #[test]
    fn blend_shape() {
        assert_eq!(swing_step_construction(0.0, -0.2, 0.3, 0.32), -0.2);
        assert_eq!(swing_step_construction(0.5, -0.2, 0.3, 0.32), 0.3);
        assert!((swing_step_construction(0.16, -0.2, 0.3, 0.32) - 0.05).abs() < 1e-12);
        // Zero slope at both ends.
        let e = 1e-7;
        assert!(blend(e, 0.32) < 1e-12);
        assert!(1.0 - blend(0.32 - e, 0.32) < 1e-12);
    }

    #[test]
    fn step_commands() {
        let p = HlipParams::new(9.81, 0.85, 0.35, 0.1).unwrap();
        let orbit = Orbit::P1(P1Orbit::new(0.4, p).unwrap());
        let k = SteppingGain(0.15);
        let on = orbit.target(StanceLeg::Left);
        let l0 = hlip_step_command(on, &orbit, k, StanceLeg::Left).unwrap();
        assert!((l0 - orbit.nominal_step_length(StanceLeg::Left)).abs() < 1e-12);
        let off = PlanarState::new(on.x, on.xdot + 0.1);
        let l1 = hlip_step_command(off, &orbit, k, StanceLeg::Left).unwrap();
        let nominal_shift = hlip::p1_nominal_step_length(off, &p).unwrap()
            - hlip::p1_nominal_step_length(on, &p).unwrap();
        assert!((l1 - l0 - nominal_shift - 0.015).abs() < 1e-12);
        let r = raibert_augmented_command(off, &orbit, k, StanceLeg::Left, 0.0, 0.5, 0.1).unwrap();
        assert_eq!(r, l1);
        let r = raibert_augmented_command(off, &orbit, k, StanceLeg::Left, 0.02, 0.5, 0.1).unwrap();
        assert!((r - l1 - 0.008).abs() < 1e-12);
    }
}
