//! Fixed-step RK4 with guard localization by bisection.

use crate::error::{AslipError, Result};

/// Which way a guard function must cross zero to fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Falling,
    Rising,
}

/// Zero-crossing event on `(t, y)`.
pub struct Guard<'a, const N: usize> {
    pub func: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    pub direction: Direction,
    /// The guard only becomes live after its (direction-adjusted) value has
    /// reached this level; `None` arms it immediately. Used for touchdown, so
    /// a swing foot still at the ground right after lift-off is ignored.
    pub arm_above: Option<f64>,
}

impl<'a, const N: usize> Guard<'a, N> {
    pub fn new(direction: Direction, func: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self {
            func: Box::new(func),
            direction,
            arm_above: None,
        }
    }

    pub fn armed_above(mut self, level: f64) -> Self {
        self.arm_above = Some(level);
        self
    }

    /// Guard value oriented so the event is always a `+ → ≤0` transition.
    fn oriented(&self, t: f64, y: &[f64; N]) -> f64 {
        let v = (self.func)(t, y);
        match self.direction {
            Direction::Falling => v,
            Direction::Rising => -v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Integrator step (s).
    pub dt: f64,
    /// Event bracket width (s).
    pub time_tol: f64,
    /// Required |guard| at the located event, in the guard's units.
    pub value_tol: f64,
    /// Give up if no guard fires within this long (s).
    pub max_duration: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            time_tol: 1e-9,
            value_tol: 1e-6,
            max_duration: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainEnd<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub duration: f64,
    /// Index into the guard slice of the guard that fired.
    pub guard: usize,
    /// Guard value at the located event.
    pub residual: f64,
}

/// Stage inset used when stepping between breaks (s).
const BREAK_INSET: f64 = 1e-10;

pub fn rk4_step<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    t: f64,
    y: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    rk4_step_inset(f, t, y, h, 0.0)
}

/// RK4 whose first and last stages are evaluated `inset` inside the step,
/// so a jump in `f` exactly at either end is always seen from within.
fn rk4_step_inset<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    t: f64,
    y: &[f64; N],
    h: f64,
    inset: f64,
) -> Result<[f64; N]> {
    let shift = |base: &[f64; N], k: &[f64; N], a: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += a * k[i];
        }
        out
    };
    let k1 = f(t + inset, y)?;
    let k2 = f(t + 0.5 * h, &shift(y, &k1, 0.5 * h))?;
    let k3 = f(t + 0.5 * h, &shift(y, &k2, 0.5 * h))?;
    let k4 = f(t + h - inset, &shift(y, &k3, h))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates from `(t0, y0)` until one of `guards` fires, calling `observe`
/// after every accepted full step (not at the located event).
///
/// The event is bracketed by the first step whose end makes an armed guard
/// non-positive and then refined by bisection on the sub-step length, each
/// trial being a single RK4 step from the bracket's start. Bisection stops
/// once the bracket is below `time_tol` and the guard is within `value_tol`
/// of zero, or when the bracket can no longer shrink.
pub fn integrate_domain<const N: usize>(
    t0: f64,
    y0: [f64; N],
    f: &dyn Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    guards: &[Guard<'_, N>],
    opts: &StepOptions,
    observe: &mut dyn FnMut(f64, &[f64; N]),
) -> Result<DomainEnd<N>> {
    integrate_domain_with_breaks(t0, y0, f, guards, opts, &|_| None, observe)
}

/// As [`integrate_domain`], but a step never straddles a time returned by
/// `next_break(t)` (the first break strictly after `t`): the step is cut
/// short there. Used for right-hand sides with kinks at known times. The
/// `dt` grid and the `observe` calls are unchanged.
pub fn integrate_domain_with_breaks<const N: usize>(
    t0: f64,
    y0: [f64; N],
    f: &dyn Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    guards: &[Guard<'_, N>],
    opts: &StepOptions,
    next_break: &dyn Fn(f64) -> Option<f64>,
    observe: &mut dyn FnMut(f64, &[f64; N]),
) -> Result<DomainEnd<N>> {
    if !(opts.dt > 0.0 && opts.time_tol > 0.0 && opts.value_tol > 0.0) {
        return Err(AslipError::InvalidParams(
            "integrator step and tolerances must be positive".into(),
        ));
    }
    let mut armed: Vec<bool> = guards.iter().map(|g| g.arm_above.is_none()).collect();
    let mut prev: Vec<f64> = guards.iter().map(|g| g.oriented(t0, &y0)).collect();
    for (i, g) in guards.iter().enumerate() {
        if let Some(level) = g.arm_above {
            armed[i] = prev[i] >= level;
        }
    }
    let mut t = t0;
    let mut y = y0;
    let mut n = 0u64;
    let min_step = (100.0 * BREAK_INSET).min(1e-3 * opts.dt);
    loop {
        let grid = t0 + (n + 1) as f64 * opts.dt;
        let t_next = match next_break(t) {
            Some(b) if b > t + min_step && b < grid - min_step => b,
            _ => grid,
        };
        let on_grid = t_next == grid;
        let y_next = rk4_step_inset(f, t, &y, t_next - t, BREAK_INSET)?;
        if y_next.iter().any(|v| !v.is_finite()) {
            return Err(AslipError::NonFinite(t_next));
        }
        let mut first: Option<(f64, [f64; N], usize, f64)> = None;
        for (i, g) in guards.iter().enumerate() {
            let value = g.oriented(t_next, &y_next);
            if armed[i] && prev[i] > 0.0 && value <= 0.0 {
                let (tau, ye, res) = localize(f, g, t, &y, t_next - t, opts)?;
                if first.map_or(true, |(best, ..)| tau < best) {
                    first = Some((tau, ye, i, res));
                }
            }
            if let Some(level) = g.arm_above {
                armed[i] |= value >= level;
            }
            prev[i] = value;
        }
        if let Some((tau, ye, i, res)) = first {
            let te = t + tau;
            return Ok(DomainEnd {
                t: te,
                y: ye,
                duration: te - t0,
                guard: i,
                residual: res,
            });
        }
        t = t_next;
        y = y_next;
        if !on_grid {
            continue;
        }
        n += 1;
        observe(t, &y);
        if t - t0 > opts.max_duration {
            return Err(AslipError::Stall(opts.max_duration));
        }
    }
}

fn localize<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    guard: &Guard<'_, N>,
    t: f64,
    y: &[f64; N],
    h: f64,
    opts: &StepOptions,
) -> Result<(f64, [f64; N], f64)> {
    let mut lo = 0.0;
    let mut hi = h;
    let mut y_hi = rk4_step_inset(f, t, y, hi, BREAK_INSET)?;
    let mut g_hi = guard.oriented(t + hi, &y_hi);
    for _ in 0..200 {
        if hi - lo <= opts.time_tol && g_hi.abs() <= opts.value_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let y_mid = rk4_step_inset(f, t, y, mid, BREAK_INSET.min(0.25 * mid))?;
        let g_mid = guard.oriented(t + mid, &y_mid);
        if g_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            y_hi = y_mid;
            g_hi = g_mid;
        }
    }
    Ok((hi, y_hi, g_hi))
}
