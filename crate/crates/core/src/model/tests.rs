use super::check;
use super::*;
use crate::lyapunov::Certificate;
use crate::rng;
use crate::scalar::lit;
use approx::assert_relative_eq;

fn params() -> BuiltinParams {
    BuiltinParams::default()
}

fn sys(name: &str) -> SystemSpec<f64> {
    builtin(name, &params()).unwrap()
}

fn sys_n(name: &str, n: usize) -> SystemSpec<f64> {
    builtin(name, &BuiltinParams { n: Some(n), ..Default::default() }).unwrap()
}

fn random_point(dim: usize, scale: f64, stream: u64, i: u64) -> Vec<f64> {
    (0..dim)
        .map(|j| scale * (2.0 * rng::unit_open(rng::key4(stream, i, j as u64, 0)) - 1.0))
        .collect()
}

#[test]
fn drift_open_problem_balances_at_quarter_period() {
    // x'' + x' + x^3 = sin t at x=1, y=0, t=pi/2: the forcing cancels the
    // potential gradient exactly.
    let sys = sys("open-problem-v4");
    let (dx, dy) = sys.drift(&[1.0], &[0.0], std::f64::consts::FRAC_PI_2).unwrap();
    assert_eq!(dx, vec![0.0]);
    assert!(dy[0].abs() < 1e-15, "dy = {}", dy[0]);
}

#[test]
fn drift_vanishes_at_equilibrium() {
    let sys = sys("example-4.1");
    for t in [0.0, 1.0, 4.5] {
        let (dx, dy) = sys.drift(&[0.0, 0.0], &[0.0, 0.0], t).unwrap();
        assert_eq!(dx, vec![0.0, 0.0]);
        assert_eq!(dy, vec![0.0, 0.0]);
    }
}

#[test]
fn drift_example_41_hand_value() {
    // n=1, x=1, y=2, t=0: D^2F(1) = 14, grad V = 2/3, dy = -(28 + 2/3).
    let sys = sys_n("example-4.1", 1);
    let (dx, dy) = sys.drift(&[1.0], &[2.0], 0.0).unwrap();
    assert_eq!(dx, vec![2.0]);
    assert_relative_eq!(dy[0], -86.0 / 3.0, max_relative = 1e-14);
}

#[test]
fn drift_dimension_mismatch_is_an_error() {
    let sys = sys("example-4.1");
    assert!(matches!(
        sys.drift(&[1.0], &[0.0, 0.0], 0.0),
        Err(crate::error::Error::DimensionMismatch { .. })
    ));
}

#[test]
fn diffusion_zero_and_identity() {
    let zero = sys("example-4.1");
    let m = zero.diffusion(&[0.3, -0.4], &[1.0, 0.2], 0.7).unwrap();
    assert!(m.data().iter().all(|&v| v == 0.0));

    let unit = builtin::<f64>(
        "example-4.1",
        &BuiltinParams { noise: Some(NoiseSpec::Const { sigma: 1.0 }), ..Default::default() },
    )
    .unwrap();
    let m = unit.diffusion(&[0.3, -0.4], &[1.0, 0.2], 0.7).unwrap();
    assert_eq!(m[(0, 0)], 1.0);
    assert_eq!(m[(1, 1)], 1.0);
    assert_eq!(m[(0, 1)], 0.0);
}

#[test]
fn diffusion_state_quad_saturates_declared_bound() {
    // sqrt(8 * 1 + 1) = 3 on each diagonal entry at x=(1,0), y=0.
    let sys = builtin::<f64>(
        "example-4.1",
        &BuiltinParams {
            noise: Some(NoiseSpec::StateQuad { c3: 8.0, big_c: 1.0 }),
            ..Default::default()
        },
    )
    .unwrap();
    let m = sys.diffusion(&[1.0, 0.0], &[0.0, 0.0], 0.0).unwrap();
    assert_relative_eq!(m[(0, 0)], 3.0, max_relative = 1e-15);
    assert_relative_eq!(m[(1, 1)], 3.0, max_relative = 1e-15);
    assert_eq!(m[(0, 1)], 0.0);
}

#[test]
fn builtin_example_41_carries_paper_constants() {
    let sys = sys("example-4.1");
    assert_eq!(sys.dim(), 2);
    assert_relative_eq!(sys.period(), 2.0 * std::f64::consts::PI, max_relative = 1e-15);
    match sys.metadata.as_ref().unwrap() {
        Certificate::Uf(c) => {
            assert_eq!(c.a, 8.0);
            assert_eq!(c.big_d, 19.0);
            assert_eq!(c.b, 8.0);
            assert_eq!(c.m, 1.0);
            assert_eq!(c.big_m, 36.0);
        }
        _ => panic!("expected UF certificate"),
    }
    // V(0, 0) = ln 2, F(e_1) = 2.
    assert_relative_eq!(sys.potential.eval(&[0.0, 0.0], 0.0), 2f64.ln(), max_relative = 1e-15);
    let f = sys.friction.friction_function().unwrap();
    assert_relative_eq!(f.eval(&[1.0, 0.0]), 2.0, max_relative = 1e-15);
}

#[test]
fn builtin_open_problem_shape() {
    let sys = sys("open-problem-v4");
    assert_eq!(sys.dim(), 1);
    assert_eq!(sys.wiener_dim(), 1);
    // F = x^2/2, V = x^4/4, E = -sin t, Sigma = 1.
    let f = sys.friction.friction_function().unwrap();
    assert_relative_eq!(f.eval(&[3.0]), 4.5, max_relative = 1e-15);
    assert_relative_eq!(sys.potential.eval(&[2.0], 1.0), 4.0, max_relative = 1e-15);
    let e = sys.perturbation.eval(&[0.0], &[0.0], std::f64::consts::FRAC_PI_2).unwrap();
    assert_relative_eq!(e[0], -1.0, max_relative = 1e-12);
    let m = sys.diffusion(&[0.0], &[0.0], 0.0).unwrap();
    assert_eq!(m[(0, 0)], 1.0);
}

#[test]
fn builtin_relax_variant_flips_friction_sign_near_origin() {
    let relax = sys_n("example-4.1-relax", 1);
    let f = relax.friction.friction_function().unwrap();
    // F = r^2 - r: negative inside the unit ball.
    assert_relative_eq!(f.eval(&[0.5]), 0.0625 - 0.25, max_relative = 1e-15);
    // D^2 F(0) = -2 < 0: relaxation oscillation (friction loses definiteness).
    let h = f.hess(&[0.0]).unwrap();
    assert_relative_eq!(h[(0, 0)], -2.0, max_relative = 1e-15);
}

#[test]
fn builtin_unknown_name_lists_catalog() {
    match builtin::<f64>("example-9.9", &params()) {
        Err(Error::UnknownBuiltin { name, valid }) => {
            assert_eq!(name, "example-9.9");
            assert!(valid.contains("example-4.1"));
            assert!(valid.contains("van-der-pol"));
        }
        Err(other) => panic!("expected catalog error, got {other:?}"),
        Ok(_) => panic!("expected catalog error, got a system"),
    }
}

#[test]
fn builtin_polynomial_rejects_malformed_coefficients() {
    let params = BuiltinParams {
        n: Some(2),
        v_terms: Some(vec![(vec![2], 1.0)]), // wrong exponent arity
        f_terms: Some(vec![(vec![2, 0], 1.0)]),
        ..Default::default()
    };
    assert!(matches!(builtin::<f64>("polynomial", &params), Err(Error::PolyParse(_))));
}

#[test]
fn builtin_polynomial_evaluates() {
    let params = BuiltinParams {
        n: Some(1),
        v_terms: Some(vec![(vec![4], 0.25)]),
        f_terms: Some(vec![(vec![2], 0.5)]),
        ..Default::default()
    };
    let sys = builtin::<f64>("polynomial", &params).unwrap();
    let (_, dy) = sys.drift(&[2.0], &[1.0], 0.0).unwrap();
    // D^2F = 1, grad V = x^3: dy = -(1 + 8) = -9.
    assert_relative_eq!(dy[0], -9.0, max_relative = 1e-14);
}

#[test]
fn numeric_derivatives_quadratic_gradient() {
    let f = numeric_derivatives(ScalarField::<f64>::new(2, |x| x[0] * x[0] + x[1] * x[1]));
    let g = f.grad(&[1.0, 1.0]).unwrap();
    assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 2.0).abs() < 1e-6, "g = {g:?}");
}

#[test]
fn numeric_derivatives_quartic_hessian() {
    let f = numeric_derivatives(ScalarField::<f64>::new(1, |x| x[0].powi(4)));
    let h = f.hess(&[1.0]).unwrap();
    assert!((h[(0, 0)] - 12.0).abs() < 1e-3, "h = {}", h[(0, 0)]);
}

#[test]
fn numeric_derivatives_constant_field() {
    let f = numeric_derivatives(ScalarField::<f64>::new(3, |_| 7.5));
    let g = f.grad(&[0.2, -0.3, 1.0]).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-9), "g = {g:?}");
}

#[test]
fn numeric_derivatives_reports_bad_stencils() {
    let f = numeric_derivatives(ScalarField::<f64>::new(1, |x| x[0].ln()));
    assert!(matches!(f.grad(&[0.0]), Err(Error::NumericDomain { .. })));
}

#[test]
fn missing_hessian_blocks_hessian_friction() {
    let f = ScalarField::<f64>::new(1, |x| x[0] * x[0]);
    assert!(matches!(FrictionSpec::hessian_of(f), Err(Error::CapabilityMissing(_))));
}

#[test]
fn builtin_drift_and_diffusion_are_exactly_periodic() {
    // Dyadic times add exactly with the f64 period, and the builtins reduce
    // the phase modulo the period, so equality is exact.
    for name in ["example-4.1", "example-4.2", "example-4.3", "open-problem-v4", "van-der-pol"] {
        let sys = builtin::<f64>(
            name,
            &BuiltinParams {
                n: Some(1),
                noise: Some(NoiseSpec::StateQuad { c3: 0.5, big_c: 1.0 }),
                ..Default::default()
            },
        )
        .unwrap();
        let period = sys.period();
        for i in 0..20u64 {
            let x = random_point(1, 2.0, 100 + i, 0);
            let y = random_point(1, 2.0, 200 + i, 1);
            let t = (i as f64) * 0.078125; // multiples of 2^-7
            let (dx0, dy0) = sys.drift(&x, &y, t).unwrap();
            let (dx1, dy1) = sys.drift(&x, &y, t + period).unwrap();
            assert_eq!(dx0, dx1, "{name}: dx not exactly periodic at t={t}");
            assert_eq!(dy0, dy1, "{name}: dy not exactly periodic at t={t}");
            let s0 = sys.diffusion(&x, &y, t).unwrap();
            let s1 = sys.diffusion(&x, &y, t + period).unwrap();
            assert_eq!(s0.data(), s1.data(), "{name}: diffusion not exactly periodic");
        }
    }
}

#[test]
fn drift_antisymmetry_in_velocity() {
    // With E = 0, dy(x, y) + dy(x, -y) = -2 grad V(x, t).
    for name in ["example-4.1", "example-4.2", "open-problem-v4"] {
        let mut p = params();
        p.n = Some(2);
        p.amplitude = Some(0.0);
        let sys = builtin::<f64>(name, &p).unwrap();
        for i in 0..50u64 {
            let x = random_point(2, 1.5, 300 + i, 0);
            let y = random_point(2, 1.5, 400 + i, 1);
            let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
            let t = rng::unit_open(rng::key2(7, i)) * sys.period();
            let (_, dy_plus) = sys.drift(&x, &y, t).unwrap();
            let (_, dy_minus) = sys.drift(&x, &neg_y, t).unwrap();
            let grad_v = sys.potential.grad_x(&x, t).unwrap();
            for c in 0..2 {
                let lhs = dy_plus[c] + dy_minus[c];
                assert!(
                    (lhs + 2.0 * grad_v[c]).abs() <= 1e-12,
                    "{name}: antisymmetry defect {} at x={x:?}",
                    (lhs + 2.0 * grad_v[c]).abs()
                );
            }
        }
    }
}

#[test]
fn builtin_derivatives_match_finite_differences() {
    let times: Vec<f64> = (0..8).map(|i| i as f64 * 0.7).collect();
    for name in builtin_names() {
        if *name == "polynomial" {
            continue;
        }
        let mut p = params();
        p.n = Some(2);
        let sys = builtin::<f64>(name, &p).unwrap();
        let points: Vec<Vec<f64>> = (0..100).map(|i| random_point(2, 5.0, 500, i)).collect();
        let f = sys.friction.friction_function().unwrap();
        let worst_grad = check::gradient_consistency(f, &points).unwrap();
        assert!(worst_grad <= 1e-5, "{name}: friction gradient off by {worst_grad}");
        let worst_hess = check::hessian_consistency(f, &points).unwrap();
        assert!(worst_hess <= 1e-5, "{name}: friction hessian off by {worst_hess}");
        let sym = check::hessian_symmetry(f, &points).unwrap();
        assert!(sym <= 1e-12, "{name}: hessian asymmetry {sym}");
        let worst_v = check::time_field_consistency(&sys.potential, &points, &times).unwrap();
        assert!(worst_v <= 1e-5, "{name}: potential derivatives off by {worst_v}");
        let lb = check::lower_bound_margin(&sys.potential, &points, &times);
        assert!(lb >= 0.0, "{name}: declared lower bound violated by {lb}");
    }
}

#[test]
fn hess_apply_agrees_with_full_hessian() {
    for name in ["example-4.1", "example-4.3", "van-der-pol"] {
        let sys = sys_n(name, 3);
        let f = sys.friction.friction_function().unwrap();
        for i in 0..20u64 {
            let x = random_point(3, 2.0, 600 + i, 0);
            let v = random_point(3, 2.0, 700 + i, 1);
            let mut fast = vec![0.0; 3];
            f.hess_apply_into(&x, &v, &mut fast).unwrap();
            let slow = f.hess(&x).unwrap().matvec(&v);
            for c in 0..3 {
                assert_relative_eq!(fast[c], slow[c], max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn noise_too_strong_drops_certificate_with_note() {
    // c3 = 20 on example-4.1 (n=1) forces c2 = 20/16 * 1 > 1.
    let sys = builtin::<f64>(
        "example-4.1",
        &BuiltinParams {
            n: Some(1),
            noise: Some(NoiseSpec::StateQuad { c3: 20.0, big_c: 1.0 }),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(sys.metadata.is_none());
    assert!(sys.metadata_note.as_deref().unwrap_or("").contains("certificate"));
}

#[test]
fn scalar_field_generic_over_dd() {
    use crate::scalar::DoubleDouble;
    let sys = builtin::<DoubleDouble>("example-4.1", &params()).unwrap();
    let x = [DoubleDouble::from_f64(1.0), DoubleDouble::from_f64(0.0)];
    let y = [DoubleDouble::from_f64(0.0), DoubleDouble::from_f64(0.0)];
    let (_, dy) = sys.drift(&x, &y, DoubleDouble::from_f64(0.0)).unwrap();
    // dy_1 = -grad V = -2/3 at x = e_1, t = 0.
    assert!((dy[0].value() + 2.0 / 3.0).abs() < 1e-30);
}

#[test]
fn lit_roundtrips() {
    let v: f64 = lit(0.25);
    assert_eq!(v, 0.25);
}
