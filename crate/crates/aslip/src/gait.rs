//! The periodic stepping-in-place gait and its leg-length references.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AslipError, Result};
use crate::params::AslipParams;

pub const GAIT_SCHEMA: &str = "aslip-gait/1";

/// Leg-length samples on a uniform grid spanning one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegProfile {
    pub length: Vec<f64>,
    pub rate: Vec<f64>,
    pub accel: Vec<f64>,
}

impl LegProfile {
    fn check(&self, n: usize, what: &str) -> Result<()> {
        if self.length.len() != n || self.rate.len() != n || self.accel.len() != n {
            return Err(AslipError::InvalidParams(format!(
                "{what} profile must have {n} samples"
            )));
        }
        Ok(())
    }
}

/// One domain of the gait. `stance` is the leg loaded through single
/// support (and trailing in the following double support); `swing` is the
/// other leg, which touches down at the start of double support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitSegment {
    pub duration: f64,
    pub stance: LegProfile,
    pub swing: LegProfile,
    pub mass_height: Vec<f64>,
    pub mass_velocity: Vec<f64>,
    pub stance_force: Vec<f64>,
    pub swing_force: Vec<f64>,
}

impl GaitSegment {
    pub fn samples(&self) -> usize {
        self.mass_height.len()
    }

    pub fn spacing(&self) -> f64 {
        self.duration / (self.samples() - 1) as f64
    }

    fn check(&self, what: &str) -> Result<()> {
        let n = self.samples();
        if n < 2 || !(self.duration > 0.0) {
            return Err(AslipError::InvalidParams(format!(
                "{what} segment needs ≥ 2 samples and positive duration"
            )));
        }
        self.stance.check(n, what)?;
        self.swing.check(n, what)?;
        if self.mass_velocity.len() != n
            || self.stance_force.len() != n
            || self.swing_force.len() != n
        {
            return Err(AslipError::InvalidParams(format!(
                "{what} segment sample counts differ"
            )));
        }
        Ok(())
    }
}

/// State of the periodic orbit at the lift-off that starts single support on
/// leg A, with leg A's clock phase at that instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitBoundary {
    pub clock_phase: f64,
    pub mass_height: f64,
    pub mass_velocity: f64,
    pub stance_length: f64,
    pub stance_rate: f64,
    pub swing_length: f64,
    pub swing_rate: f64,
}

/// Durations and mean height measured by simulating the gait in place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayStats {
    pub t_ssp: f64,
    pub t_dsp: f64,
    pub mean_height: f64,
    /// Largest per-step change of the lift-off state over the replay.
    pub max_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitMetadata {
    pub cost: f64,
    pub max_defect: f64,
    pub periodicity_residual: f64,
    pub net_velocity: f64,
    pub max_violation: f64,
    pub iterations: usize,
    pub solve_seconds: f64,
    pub replay: Option<ReplayStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gait {
    pub schema: String,
    pub params: AslipParams,
    pub t_ssp: f64,
    pub t_dsp: f64,
    pub ssp: GaitSegment,
    pub dsp: GaitSegment,
    pub boundary: GaitBoundary,
    pub metadata: GaitMetadata,
}

/// Desired actuator length, rate and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegReference {
    pub l: f64,
    pub l_dot: f64,
    pub l_ddot: f64,
}

/// Cubic Hermite interpolation of (value, slope) samples with spacing `h`.
fn hermite(values: &[f64], slopes: &[f64], h: f64, t: f64) -> LegReference {
    let last = values.len() - 2;
    let k = ((t / h).floor().max(0.0) as usize).min(last);
    let s = (t - k as f64 * h) / h;
    let (p0, p1) = (values[k], values[k + 1]);
    let (m0, m1) = (slopes[k] * h, slopes[k + 1] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let l = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * m1;
    let d = (6.0 * s2 - 6.0 * s) * p0
        + (3.0 * s2 - 4.0 * s + 1.0) * m0
        + (-6.0 * s2 + 6.0 * s) * p1
        + (3.0 * s2 - 2.0 * s) * m1;
    let dd = (12.0 * s - 6.0) * p0
        + (6.0 * s - 4.0) * m0
        + (-12.0 * s + 6.0) * p1
        + (6.0 * s - 2.0) * m1;
    LegReference {
        l,
        l_dot: d / h,
        l_ddot: dd / (h * h),
    }
}

impl Gait {
    pub fn step_period(&self) -> f64 {
        self.t_ssp + self.t_dsp
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != GAIT_SCHEMA {
            return Err(AslipError::InvalidParams(format!(
                "unsupported gait schema {:?}, expected {GAIT_SCHEMA:?}",
                self.schema
            )));
        }
        self.params.validate()?;
        self.ssp.check("single support")?;
        self.dsp.check("double support")?;
        if (self.ssp.duration - self.t_ssp).abs() > 1e-12
            || (self.dsp.duration - self.t_dsp).abs() > 1e-12
        {
            return Err(AslipError::InvalidParams(
                "segment durations disagree with gait durations".into(),
            ));
        }
        Ok(())
    }

    /// Reference for a leg whose stride clock reads `phase`. One stride lasts
    /// two steps: stance through single support, trailing in double support,
    /// then swing and leading in double support.
    pub fn leg_reference(&self, phase: f64) -> LegReference {
        let t = self.step_period();
        let p = phase.rem_euclid(2.0 * t);
        let (seg, prof, local) = if p < self.t_ssp {
            (&self.ssp, &self.ssp.stance, p)
        } else if p < t {
            (&self.dsp, &self.dsp.stance, p - self.t_ssp)
        } else if p < t + self.t_ssp {
            (&self.ssp, &self.ssp.swing, p - t)
        } else {
            (&self.dsp, &self.dsp.swing, p - t - self.t_ssp)
        };
        hermite(&prof.length, &prof.rate, seg.spacing(), local)
    }

    /// First reference grid point strictly after clock reading `phase`. The
    /// reference acceleration jumps there.
    pub fn next_knot(&self, phase: f64) -> f64 {
        let t = self.step_period();
        let stride = 2.0 * t;
        let base = (phase / stride).floor() * stride;
        let p = phase - base;
        let (hs, hd) = (self.ssp.spacing(), self.dsp.spacing());
        // Segment starts within the stride, with their grid spacing.
        let segs = [
            (0.0, hs, self.t_ssp),
            (self.t_ssp, hd, t),
            (t, hs, t + self.t_ssp),
            (t + self.t_ssp, hd, stride),
        ];
        for (start, h, end) in segs {
            if p < end {
                let k = ((p - start) / h).floor() + 1.0;
                let knot = (start + k * h).min(end);
                if knot > p {
                    return base + knot;
                }
            }
        }
        base + stride
    }

    /// Time-average of the optimized mass height over one step.
    pub fn mean_height(&self) -> f64 {
        let avg = |seg: &GaitSegment| {
            let h = seg.spacing();
            let n = seg.samples();
            let inner: f64 = seg.mass_height[1..n - 1].iter().sum();
            h * (inner + 0.5 * (seg.mass_height[0] + seg.mass_height[n - 1]))
        };
        (avg(&self.ssp) + avg(&self.dsp)) / self.step_period()
    }

    /// H-LIP parameters matched to this gait: durations and height from the
    /// in-place replay when available, otherwise from the optimizer output.
    pub fn hlip_params(&self) -> Result<hlip::HlipParams> {
        let (t_ssp, t_dsp, z0) = match self.metadata.replay {
            Some(r) => (r.t_ssp, r.t_dsp, r.mean_height),
            None => (self.t_ssp, self.t_dsp, self.mean_height()),
        };
        Ok(hlip::HlipParams::new(self.params.g, z0, t_ssp, t_dsp)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let gait: Gait = serde_json::from_str(text)?;
        gait.validate()?;
        Ok(gait)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| 0.3 + 0.2 * t - 1.5 * t * t + 0.7 * t * t * t;
        let df = |t: f64| 0.2 - 3.0 * t + 2.1 * t * t;
        let h = 0.05;
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * h).collect();
        let v: Vec<f64> = xs.iter().map(|&t| f(t)).collect();
        let d: Vec<f64> = xs.iter().map(|&t| df(t)).collect();
        for &t in &[0.0, 0.013, 0.25, 0.4999, 0.5] {
            let r = hermite(&v, &d, h, t);
            assert!((r.l - f(t)).abs() < 1e-12);
            assert!((r.l_dot - df(t)).abs() < 1e-10);
            assert!((r.l_ddot - (-3.0 + 4.2 * t)).abs() < 1e-8);
        }
    }
}
