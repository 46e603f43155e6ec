//! Empirical inner-product growth fit against brute-force oracles.

use pernewt::model::{builtin, BuiltinParams, ScalarField, TimeScalarField};
use pernewt::polysys::fit_inner_bound;

#[test]
fn example_41_fit_recovers_quadratic_growth() {
    // <grad V, grad F - 8x> = 4 |x|^2 (2|x|^2 - 3) / (2 + sin t + |x|^2),
    // which grows like 8 |x|^2: the fitted exponent must come out near 1.
    let sys = builtin::<f64>("example-4.1", &BuiltinParams { n: Some(2), ..Default::default() }).unwrap();
    let f = sys.friction.friction_function().unwrap();
    let radii: Vec<f64> = vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
    let fit = fit_inner_bound(&sys.potential, f, 8.0, &radii, 32, 16).unwrap();
    assert!((fit.m_hat - 1.0).abs() < 0.15, "m_hat = {}", fit.m_hat);
    assert!(fit.b_hat > 2.0 && fit.b_hat < 8.0, "b_hat = {}", fit.b_hat);
    assert!(fit.big_m_hat >= 0.0);
    // Shell minima grow monotonically here.
    for w in fit.shell_minima.windows(2) {
        assert!(w[1].1 > w[0].1);
    }
}

#[test]
fn quartic_pair_fit_matches_independent_least_squares() {
    // V = x^2, F = x^4/2, a = 1: g(x) = 2x (2x^3 - x) = 4x^4 - 2x^2.
    let potential = TimeScalarField::new(1, 1.0, 0.0, |x: &[f64], _t| x[0] * x[0])
        .with_grad_x(|x, _, g| {
            g[0] = 2.0 * x[0];
            Ok(())
        })
        .with_dt(|_, _| Ok(0.0));
    let friction = ScalarField::new(1, |x: &[f64]| 0.5 * x[0].powi(4))
        .with_grad(|x, g| {
            g[0] = 2.0 * x[0].powi(3);
            Ok(())
        })
        .with_hess(|x, m| {
            m[(0, 0)] = 6.0 * x[0] * x[0];
            Ok(())
        });
    let radii: Vec<f64> = (1..=8).map(f64::from).collect();
    let fit = fit_inner_bound(&potential, &friction, 1.0, &radii, 8, 1).unwrap();

    assert!((fit.m_hat - 2.0).abs() < 0.05, "m_hat = {}", fit.m_hat);
    assert!((fit.b_hat - 2.0).abs() < 0.2, "b_hat = {}", fit.b_hat);

    // Independent oracle: brute-force shell minima of the explicit quartic
    // and reproduce the log-log fit by hand on the top half.
    let g = |r: f64| 4.0 * r.powi(4) - 2.0 * r * r;
    for (i, &(r, v)) in fit.shell_minima.iter().enumerate() {
        assert_eq!(r, radii[i]);
        assert!((v - g(r).min(g(-r))).abs() <= 1e-9 * (1.0 + v.abs()));
    }
    let top: Vec<(f64, f64)> = radii[4..].iter().map(|&r| (r.ln(), g(r).ln())).collect();
    let k = top.len() as f64;
    let sx: f64 = top.iter().map(|p| p.0).sum();
    let sy: f64 = top.iter().map(|p| p.1).sum();
    let sxx: f64 = top.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = top.iter().map(|p| p.0 * p.1).sum();
    let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let intercept = (sy - slope * sx) / k;
    assert!((fit.m_hat - slope / 2.0).abs() < 1e-9);
    assert!((fit.b_hat - (intercept.exp() / 2.0)).abs() < 1e-9 * (1.0 + fit.b_hat));

    // The fitted bound really holds on the sampled shells.
    for &(r, v) in &fit.shell_minima {
        assert!(v >= fit.b_hat * r.powf(2.0 * fit.m_hat) - fit.big_m_hat - 1e-9);
    }
}

#[test]
fn constant_potential_is_a_dissipativity_failure() {
    let potential = TimeScalarField::new(1, 1.0, 4.0, |_x: &[f64], _t| 5.0);
    let friction = ScalarField::new(1, |x: &[f64]| 0.5 * x[0] * x[0]).with_grad(|x, g| {
        g[0] = x[0];
        Ok(())
    });
    let radii: Vec<f64> = (1..=5).map(f64::from).collect();
    match fit_inner_bound(&potential, &friction, 0.25, &radii, 8, 1) {
        Err(pernewt::Error::DissipativityFailure { .. }) => {}
        other => panic!("expected dissipativity failure, got {other:?}"),
    }
}

#[test]
fn decreasing_minima_carry_a_witness() {
    // V = -x^2 makes the inner product negative and falling.
    let potential = TimeScalarField::new(1, 1.0, f64::NEG_INFINITY, |x: &[f64], _t| -x[0] * x[0])
        .with_grad_x(|x, _, g| {
            g[0] = -2.0 * x[0];
            Ok(())
        })
        .with_dt(|_, _| Ok(0.0));
    let friction = ScalarField::new(1, |x: &[f64]| 0.5 * x[0].powi(4)).with_grad(|x, g| {
        g[0] = 2.0 * x[0].powi(3);
        Ok(())
    });
    let radii: Vec<f64> = (1..=5).map(f64::from).collect();
    match fit_inner_bound(&potential, &friction, 1.0, &radii, 8, 1) {
        Err(pernewt::Error::DissipativityFailure { witness, .. }) => {
            assert!(!witness.x.is_empty());
        }
        other => panic!("expected dissipativity failure, got {other:?}"),
    }
}

#[test]
fn shell_contract_violations() {
    let sys = builtin::<f64>("example-4.1", &BuiltinParams { n: Some(1), ..Default::default() }).unwrap();
    let f = sys.friction.friction_function().unwrap();
    assert!(fit_inner_bound(&sys.potential, f, 8.0, &[1.0, 2.0], 8, 4).is_err());
    assert!(fit_inner_bound(&sys.potential, f, 8.0, &[1.0, 3.0, 2.0], 8, 4).is_err());
}
