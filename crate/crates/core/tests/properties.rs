use hlip::{
    d2_for_velocity, orbital_energy, p1_nominal_step_length, sigma1, sigma2, ssp_flow, step_map,
    verify_orbit, HlipParams, Orbit, P1Orbit, P2Orbit, PlanarState,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> HlipParams {
    HlipParams::new(9.81, 1.0, 0.4, 0.1).unwrap()
}

/// Fixed-step classical RK4 on `ẍ = λ²x`, written independently of the
/// closed form.
fn rk4_brute_force(state: PlanarState, lambda: f64, t_end: f64, h: f64) -> PlanarState {
    let f = |x: f64, v: f64| (v, lambda * lambda * x);
    let steps = (t_end / h).round() as usize;
    let (mut x, mut v) = (state.x, state.xdot);
    for _ in 0..steps {
        let (k1x, k1v) = f(x, v);
        let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
        let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
        let (k4x, k4v) = f(x + h * k3x, v + h * k3v);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    PlanarState::new(x, v)
}

#[test]
fn ssp_flow_matches_rk4_example() {
    let p = params();
    let lambda = p.lambda().unwrap();
    let start = PlanarState::new(-0.1, 0.5636);
    let closed = ssp_flow(start, 0.4, &p).unwrap();
    let brute = rk4_brute_force(start, lambda, 0.4, 1e-6);
    assert!(closed.max_abs_diff(&brute) <= 1e-8);
    // The start sits on ẋ = −σ₁x (to four digits), so the end sits on ẋ = σ₁x.
    let s1 = sigma1(&p).unwrap();
    assert!((closed.xdot - s1 * closed.x).abs() < 1e-3);
}

#[test]
fn ssp_flow_matches_rk4_over_one_second() {
    let p = HlipParams::new(9.81, 1.0, 1.0, 0.1).unwrap();
    let lambda = p.lambda().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let s = PlanarState::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.5..0.5));
        let closed = ssp_flow(s, 1.0, &p).unwrap();
        let brute = rk4_brute_force(s, lambda, 1.0, 1e-6);
        assert!(
            closed.max_abs_diff(&brute) <= 1e-8,
            "{closed:?} vs {brute:?}"
        );
    }
}

#[test]
fn single_support_maps_line_to_line() {
    let p = params();
    let s2 = sigma2(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let x = rng.gen_range(-0.5..0.5);
        let d2 = rng.gen_range(-1.0..1.0);
        let end = ssp_flow(PlanarState::new(x, -s2 * x + d2), p.t_ssp, &p).unwrap();
        assert!((end.xdot - s2 * end.x - d2).abs() <= 1e-9);
    }
}

#[test]
fn p2_family_has_common_velocity() {
    let p = params();
    for &v in &[-0.4, -0.1, 0.0, 0.25, 0.6] {
        for i in 0..20 {
            let xb = -0.3 + 0.03 * i as f64;
            let o = P2Orbit::new(v, xb, p).unwrap();
            let r = verify_orbit(&Orbit::P2(o)).unwrap();
            assert!(r.closure_residual <= 1e-10);
            assert!((r.measured_net_velocity - v).abs() <= 1e-9, "v={v} xb={xb}");
        }
    }
    assert!(d2_for_velocity(0.25, &p).unwrap() > 0.0);
}

fn arb_params() -> impl Strategy<Value = HlipParams> {
    (5.0..15.0f64, 0.5..1.5f64, 0.1..0.8f64, 0.0..0.3f64)
        .prop_map(|(g, z0, t_ssp, t_dsp)| HlipParams::new(g, z0, t_ssp, t_dsp).unwrap())
}

fn arb_state() -> impl Strategy<Value = PlanarState> {
    (-1.0..1.0f64, -2.0..2.0f64).prop_map(|(x, v)| PlanarState::new(x, v))
}

proptest! {
    #[test]
    fn energy_is_conserved_in_single_support(s in arb_state(), frac in 0.0..1.0f64) {
        let p = params();
        let e0 = orbital_energy(s, &p).unwrap();
        let e1 = orbital_energy(ssp_flow(s, frac * p.t_ssp, &p).unwrap(), &p).unwrap();
        prop_assert!((e1 - e0).abs() <= 1e-10 * e0.abs().max(1.0));
    }

    #[test]
    fn flow_composes(s in arb_state(), t1 in 0.0..0.3f64, t2 in 0.0..0.3f64) {
        let p = params();
        let direct = ssp_flow(s, t1 + t2, &p).unwrap();
        let split = ssp_flow(ssp_flow(s, t1, &p).unwrap(), t2, &p).unwrap();
        let scale = direct.x.abs().max(direct.xdot.abs()).max(1.0);
        prop_assert!(direct.max_abs_diff(&split) <= 1e-12 * scale);
    }

    #[test]
    fn step_map_is_linear(a in arb_state(), b in arb_state(), la in -0.5..0.5f64, lb in -0.5..0.5f64) {
        let p = params();
        let sum = PlanarState::new(a.x + b.x, a.xdot + b.xdot);
        let lhs = step_map(sum, la + lb, &p).unwrap();
        let fa = step_map(a, la, &p).unwrap();
        let fb = step_map(b, lb, &p).unwrap();
        let rhs = PlanarState::new(fa.x + fb.x, fa.xdot + fb.xdot);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
        prop_assert_eq!(step_map(PlanarState::ORIGIN, 0.0, &p).unwrap(), PlanarState::ORIGIN);
    }

    #[test]
    fn velocity_untouched_by_dsp_and_exchange(s in arb_state(), t in 0.0..1.0f64, l in -1.0..1.0f64) {
        prop_assert_eq!(hlip::dsp_flow(s, t).unwrap().xdot.to_bits(), s.xdot.to_bits());
        prop_assert_eq!(hlip::impact_d2s(s, l).xdot.to_bits(), s.xdot.to_bits());
    }

    #[test]
    fn sigma_product_is_lambda_squared(p in arb_params()) {
        let lambda = p.lambda().unwrap();
        let prod = sigma1(&p).unwrap() * sigma2(&p).unwrap();
        prop_assert!((prod / (lambda * lambda) - 1.0).abs() <= 1e-10);
        prop_assert!(sigma1(&p).unwrap() > lambda);
        prop_assert!(sigma2(&p).unwrap() > 0.0 && sigma2(&p).unwrap() < lambda);
    }

    #[test]
    fn p1_orbits_mirror_and_close(p in arb_params(), v in -1.0..1.0f64) {
        let o = P1Orbit::new(v, p).unwrap();
        prop_assert!((o.ssp_initial().x + o.preimpact.x).abs() <= 1e-10);
        let next = step_map(o.preimpact, o.step_length, &p).unwrap();
        prop_assert!(next.max_abs_diff(&o.preimpact) <= 1e-10);
        let s1 = sigma1(&p).unwrap();
        prop_assert!((o.preimpact.xdot - s1 * o.preimpact.x).abs() <= 1e-10);
        let r = verify_orbit(&Orbit::P1(o)).unwrap();
        prop_assert!((r.measured_net_velocity - v).abs() <= 1e-9);
        if v != 0.0 {
            prop_assert_eq!(r.energy_sign, 1);
        }
    }

    #[test]
    fn p1_closure_from_line_states(x in -0.5..0.5f64) {
        let p = params();
        let s1 = sigma1(&p).unwrap();
        let pre = ssp_flow(PlanarState::new(x, -s1 * x), p.t_ssp, &p).unwrap();
        let l = p1_nominal_step_length(pre, &p).unwrap();
        prop_assert!(step_map(pre, l, &p).unwrap().max_abs_diff(&pre) <= 1e-10);
    }
}
