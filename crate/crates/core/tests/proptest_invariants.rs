//! Property tests for the polynomial machinery and the distance statistics.

use pernewt::linalg::Mat;
use pernewt::polysys::{min_on_sphere, MultiPoly};
use pernewt::stats::{energy_distance, sliced_w1};
use proptest::prelude::*;

/// Random homogeneous form of even degree in `n` variables.
fn homogeneous_form(n: usize, degree: u32) -> impl Strategy<Value = MultiPoly<f64>> {
    let exps = prop::collection::vec(0..=degree, n).prop_filter("degree must match", move |e| {
        e.iter().sum::<u32>() == degree
    });
    prop::collection::vec((exps, -3.0f64..3.0), 1..6).prop_filter_map("nonzero form", move |terms| {
        let poly = MultiPoly::from_f64_terms(n, &terms).ok()?;
        (!poly.is_zero()).then_some(poly)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homogeneity_reduces_to_the_sphere(
        poly in homogeneous_form(3, 4),
        dir in prop::collection::vec(-1.0f64..1.0, 3),
        scale in 0.1f64..10.0,
    ) {
        let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let u: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        let form = poly.leading_form().unwrap();
        let scaled: Vec<f64> = u.iter().map(|v| v * scale).collect();
        let expected = scale.powi(form.degree() as i32) * form.eval(&u);
        let got = form.eval(&scaled);
        prop_assert!(
            (got - expected).abs() <= 1e-10 * (1.0 + expected.abs()),
            "homogeneity: {got} vs {expected}"
        );
    }

    #[test]
    fn euler_identity_for_homogeneous_forms(
        poly in homogeneous_form(2, 6),
        point in prop::collection::vec(-4.0f64..4.0, 2),
    ) {
        let form = poly.leading_form().unwrap();
        let g = form.grad(&point);
        let lhs: f64 = point.iter().zip(&g).map(|(a, b)| a * b).sum();
        let rhs = form.degree() as f64 * form.eval(&point);
        prop_assert!(
            (lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()),
            "euler identity: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn sphere_minimum_is_monotone_under_refinement(poly in homogeneous_form(3, 4)) {
        let form = poly.leading_form().unwrap();
        let coarse = min_on_sphere(&form, 32).unwrap().min_value;
        let fine = min_on_sphere(&form, 64).unwrap().min_value;
        prop_assert!(fine <= coarse + 1e-9, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn distances_are_symmetric_and_vanish_on_identical(
        rows_a in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 4..24),
        rows_b in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 4..24),
    ) {
        let a = Mat::from_rows(&rows_a);
        let b = Mat::from_rows(&rows_b);
        let ab = energy_distance(&a, &b).unwrap();
        let ba = energy_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab >= -1e-12);
        prop_assert!(energy_distance(&a, &a.clone()).unwrap().abs() <= 1e-12);

        let sab = sliced_w1(&a, &b, 16, 5).unwrap();
        let sba = sliced_w1(&b, &a, 16, 5).unwrap();
        prop_assert!((sab - sba).abs() <= 1e-12);
        prop_assert!(sliced_w1(&a, &a.clone(), 16, 5).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn taming_caps_every_drift_displacement(
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
        h in 1e-4f64..0.5,
    ) {
        use pernewt::model::{builtin, BuiltinParams, NoiseSpec};
        use pernewt::sde::{tamed_step, PathState};
        let sys = builtin::<f64>(
            "open-problem-v4",
            &BuiltinParams { noise: Some(NoiseSpec::Zero), ..Default::default() },
        ).unwrap();
        let state = PathState::new(vec![x], vec![y], 0.0);
        let (dx, dy) = sys.drift(&[x], &[y], 0.0).unwrap();
        let drift_norm = (dx[0] * dx[0] + dy[0] * dy[0]).sqrt();
        let next = tamed_step(&sys, &state, h, &[0.0]).unwrap();
        let disp = ((next.x[0] - x).powi(2) + (next.y[0] - y).powi(2)).sqrt();
        prop_assert!(disp < 1.0, "displacement {disp} >= 1");
        prop_assert!(disp <= h * drift_norm + 1e-12, "displacement above h |b|");
    }
}
