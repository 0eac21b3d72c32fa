//! Small dense nonlinear-program solver: augmented Lagrangian with BFGS
//! inner iterations, followed by Newton projection onto the active
//! constraints.
//!
//! Problems are posed as `min f(x)` subject to `c(x) = 0` and `g(x) ≤ 0`.

use nalgebra::{DMatrix, DVector};

/// A smooth constrained problem. Constraint rows are ordered equalities
/// first, then inequalities.
pub trait NlpProblem {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;
    fn objective(&self, x: &[f64]) -> f64;
    fn objective_gradient(&self, x: &[f64], grad: &mut [f64]);
    fn constraints(&self, x: &[f64], out: &mut [f64]);
    /// Non-zero Jacobian entries `(row, col, value)`; duplicates are summed.
    fn jacobian(&self, x: &[f64], out: &mut Vec<(usize, usize, f64)>);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the largest equality residual / inequality violation.
    pub constraint_tol: f64,
    /// Target for the largest Lagrangian gradient entry.
    pub optimality_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub initial_penalty: f64,
    pub max_penalty: f64,
    /// Run the Newton feasibility projection after the multiplier loop.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            constraint_tol: 1e-9,
            optimality_tol: 1e-6,
            max_outer: 40,
            max_inner: 3000,
            initial_penalty: 10.0,
            max_penalty: 1e9,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    /// Largest entry of the augmented-Lagrangian gradient at the end of the
    /// last inner solve.
    pub stationarity: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Largest constraint violation: |c| for equalities, max(g, 0) otherwise.
pub fn max_violation<P: NlpProblem + ?Sized>(p: &P, x: &[f64]) -> f64 {
    let mut c = vec![0.0; p.num_eq() + p.num_ineq()];
    p.constraints(x, &mut c);
    violation(&c, p.num_eq())
}

fn violation(c: &[f64], n_eq: usize) -> f64 {
    let eq = c[..n_eq].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    c[n_eq..].iter().fold(eq, |m, v| m.max(*v))
}

struct Augmented<'a, P: NlpProblem + ?Sized> {
    p: &'a P,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    rho: f64,
    c: Vec<f64>,
    jac: Vec<(usize, usize, f64)>,
}

impl<P: NlpProblem + ?Sized> Augmented<'_, P> {
    fn value_and_gradient(&mut self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let xs = x.as_slice();
        let n_eq = self.p.num_eq();
        let mut grad = DVector::zeros(x.len());
        self.p.objective_gradient(xs, grad.as_mut_slice());
        let mut value = self.p.objective(xs);
        self.p.constraints(xs, &mut self.c);
        // Per-row multiplier on the constraint gradient.
        let mut weight = vec![0.0; self.c.len()];
        for i in 0..n_eq {
            let ci = self.c[i];
            value += self.lambda[i] * ci + 0.5 * self.rho * ci * ci;
            weight[i] = self.lambda[i] + self.rho * ci;
        }
        for j in 0..self.mu.len() {
            let gi = self.c[n_eq + j];
            let shifted = (self.mu[j] + self.rho * gi).max(0.0);
            value += (shifted * shifted - self.mu[j] * self.mu[j]) / (2.0 * self.rho);
            weight[n_eq + j] = shifted;
        }
        self.jac.clear();
        self.p.jacobian(xs, &mut self.jac);
        for &(r, col, v) in &self.jac {
            grad[col] += weight[r] * v;
        }
        (value, grad)
    }
}

struct Point {
    x: DVector<f64>,
    f: f64,
    g: DVector<f64>,
}

/// Strong-Wolfe line search along `dir`; returns `None` if no acceptable step
/// was found.
fn line_search(
    eval: &mut dyn FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    start: &Point,
    dir: &DVector<f64>,
) -> Option<Point> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let d0 = start.g.dot(dir);
    if !(d0 < 0.0) {
        return None;
    }
    let mut probe = |a: f64| {
        let x = &start.x + dir * a;
        let (f, g) = eval(&x);
        Point { x, f, g }
    };
    let armijo = |a: f64, f: f64| f.is_finite() && f <= start.f + C1 * a * d0;

    let zoom = |probe: &mut dyn FnMut(f64) -> Point,
                mut lo: f64,
                mut f_lo: f64,
                mut hi: f64|
     -> Option<Point> {
        let mut best: Option<Point> = None;
        for _ in 0..40 {
            let a = 0.5 * (lo + hi);
            let pt = probe(a);
            if !armijo(a, pt.f) || pt.f >= f_lo {
                hi = a;
            } else {
                let d = pt.g.dot(dir);
                if d.abs() <= -C2 * d0 {
                    return Some(pt);
                }
                if d * (hi - lo) >= 0.0 {
                    hi = lo;
                }
                lo = a;
                f_lo = pt.f;
                best = Some(pt);
            }
            if (hi - lo).abs() < 1e-16 {
                break;
            }
        }
        best
    };

    let mut a_prev = 0.0;
    let mut f_prev = start.f;
    let mut a = 1.0;
    for i in 0..40 {
        let pt = probe(a);
        if !armijo(a, pt.f) || (i > 0 && pt.f >= f_prev) {
            return zoom(&mut probe, a_prev, f_prev, a);
        }
        let d = pt.g.dot(dir);
        if d.abs() <= -C2 * d0 {
            return Some(pt);
        }
        if d >= 0.0 {
            return zoom(&mut probe, a, pt.f, a_prev);
        }
        a_prev = a;
        f_prev = pt.f;
        a *= 2.0;
    }
    None
}

/// Minimises the augmented Lagrangian from `x` until its gradient is below
/// `tol`. Returns the final gradient norm and iteration count.
fn bfgs(
    eval: &mut dyn FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    x: &mut DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> (f64, usize) {
    let n = x.len();
    let (f, g) = eval(x);
    let mut cur = Point { x: x.clone(), f, g };
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut iters = 0;
    while iters < max_iter {
        let gnorm = cur.g.amax();
        if gnorm <= tol {
            break;
        }
        iters += 1;
        let dir = -(&h * &cur.g);
        let next = match line_search(eval, &cur, &dir) {
            Some(p) => p,
            None if !fresh => {
                h.fill_with_identity();
                fresh = true;
                continue;
            }
            None => break,
        };
        let s = &next.x - &cur.x;
        let y = &next.g - &cur.g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                // Scale the initial inverse Hessian to the observed curvature.
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h.ger(-rho, &s, &hy, 1.0);
            h.ger(-rho, &hy, &s, 1.0);
            h.ger(rho * rho * yhy + rho, &s, &s, 1.0);
            fresh = false;
        }
        cur = next;
    }
    *x = cur.x;
    (cur.g.amax(), iters)
}

/// Newton steps on the equalities plus currently active or violated
/// inequalities, each the minimum-norm correction of the linearised system.
pub fn project_feasible<P: NlpProblem + ?Sized>(
    p: &P,
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> f64 {
    let n_eq = p.num_eq();
    let m = n_eq + p.num_ineq();
    let mut c = vec![0.0; m];
    let mut jac = Vec::new();
    for _ in 0..max_iter {
        p.constraints(x, &mut c);
        let viol = violation(&c, n_eq);
        if viol <= tol {
            return viol;
        }
        // Inequalities within a small margin of their bound are held there.
        let active: Vec<usize> = (0..m).filter(|&i| i < n_eq || c[i] > -1e-8).collect();
        let row_of: std::collections::HashMap<usize, usize> =
            active.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut a = DMatrix::<f64>::zeros(active.len(), x.len());
        jac.clear();
        p.jacobian(x, &mut jac);
        for &(r, col, v) in &jac {
            if let Some(&k) = row_of.get(&r) {
                a[(k, col)] += v;
            }
        }
        let rhs = DVector::from_iterator(active.len(), active.iter().map(|&i| -c[i]));
        let svd = a.svd(true, true);
        let Ok(dx) = svd.solve(&rhs, 1e-12) else {
            return viol;
        };
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi += d;
        }
    }
    p.constraints(x, &mut c);
    violation(&c, n_eq)
}

pub fn solve<P: NlpProblem + ?Sized>(p: &P, x0: &[f64], opts: &SolverOptions) -> SolveReport {
    let n_eq = p.num_eq();
    let m = n_eq + p.num_ineq();
    let mut al = Augmented {
        p,
        lambda: vec![0.0; n_eq],
        mu: vec![0.0; p.num_ineq()],
        rho: opts.initial_penalty,
        c: vec![0.0; m],
        jac: Vec::new(),
    };
    let mut x = DVector::from_column_slice(x0);
    let mut prev_viol = f64::INFINITY;
    let mut inner_total = 0;
    let mut outer = 0;
    let mut stationarity = f64::INFINITY;
    let mut inner_tol = 1e-2_f64;
    while outer < opts.max_outer {
        outer += 1;
        let (gn, it) = bfgs(
            &mut |x| al.value_and_gradient(x),
            &mut x,
            inner_tol.max(opts.optimality_tol),
            opts.max_inner,
        );
        stationarity = gn;
        inner_total += it;
        p.constraints(x.as_slice(), &mut al.c);
        let viol = violation(&al.c, n_eq);
        if viol <= opts.constraint_tol && gn <= opts.optimality_tol {
            break;
        }
        for i in 0..n_eq {
            al.lambda[i] += al.rho * al.c[i];
        }
        for j in 0..al.mu.len() {
            al.mu[j] = (al.mu[j] + al.rho * al.c[n_eq + j]).max(0.0);
        }
        if viol > 0.25 * prev_viol {
            al.rho = (al.rho * 10.0).min(opts.max_penalty);
        }
        prev_viol = viol;
        inner_tol *= 0.1;
    }
    let mut xs: Vec<f64> = x.iter().copied().collect();
    let mut viol = max_violation(p, &xs);
    if opts.polish && viol > opts.constraint_tol {
        viol = project_feasible(p, &mut xs, opts.constraint_tol, 20);
    }
    SolveReport {
        objective: p.objective(&xs),
        x: xs,
        max_violation: viol,
        stationarity,
        outer_iterations: outer,
        inner_iterations: inner_total,
        converged: viol <= opts.constraint_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min (x−1)² + (y−2)²  s.t.  x + y = 1,  x ≥ 0.2 (as 0.2 − x ≤ 0).
    struct Toy;

    impl NlpProblem for Toy {
        fn num_vars(&self) -> usize {
            2
        }
        fn num_eq(&self) -> usize {
            1
        }
        fn num_ineq(&self) -> usize {
            1
        }
        fn objective(&self, x: &[f64]) -> f64 {
            (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2)
        }
        fn objective_gradient(&self, x: &[f64], g: &mut [f64]) {
            g[0] = 2.0 * (x[0] - 1.0);
            g[1] = 2.0 * (x[1] - 2.0);
        }
        fn constraints(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] + x[1] - 1.0;
            out[1] = 0.2 - x[0];
        }
        fn jacobian(&self, _x: &[f64], out: &mut Vec<(usize, usize, f64)>) {
            out.extend([(0, 0, 1.0), (0, 1, 1.0), (1, 0, -1.0)]);
        }
    }

    #[test]
    fn solves_toy_with_active_bound() {
        // Unconstrained by the bound the optimum would be (0, 1); the bound
        // pushes it to (0.2, 0.8).
        let r = solve(&Toy, &[5.0, -3.0], &SolverOptions::default());
        assert!(r.converged);
        assert!(
            (r.x[0] - 0.2).abs() < 1e-6 && (r.x[1] - 0.8).abs() < 1e-6,
            "{r:?}"
        );
    }

    /// Rosenbrock with a circle constraint.
    struct Rosen;

    impl NlpProblem for Rosen {
        fn num_vars(&self) -> usize {
            2
        }
        fn num_eq(&self) -> usize {
            1
        }
        fn num_ineq(&self) -> usize {
            0
        }
        fn objective(&self, x: &[f64]) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn objective_gradient(&self, x: &[f64], g: &mut [f64]) {
            g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            g[1] = 200.0 * (x[1] - x[0] * x[0]);
        }
        fn constraints(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] * x[0] + x[1] * x[1] - 1.0;
        }
        fn jacobian(&self, x: &[f64], out: &mut Vec<(usize, usize, f64)>) {
            out.extend([(0, 0, 2.0 * x[0]), (0, 1, 2.0 * x[1])]);
        }
    }

    #[test]
    fn solves_constrained_rosenbrock() {
        let r = solve(&Rosen, &[0.2, 0.9], &SolverOptions::default());
        assert!(r.converged);
        // Known optimum on the unit circle: (0.7864, 0.6177).
        assert!(
            (r.x[0] - 0.786415).abs() < 1e-4 && (r.x[1] - 0.617698).abs() < 1e-4,
            "{r:?}"
        );
    }

    #[test]
    fn projection_reaches_feasibility() {
        let mut x = [0.3, 0.1];
        let v = project_feasible(&Rosen, &mut x, 1e-13, 20);
        assert!(v <= 1e-13);
    }
}
