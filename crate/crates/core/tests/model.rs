use hlde_core::{conjugate, g_eval, h_tau_eval, phi, phi_inv, CoefficientExpr, DelayMap, HalfLinearEquation};
use proptest::prelude::*;
use std::f64::consts::E;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn phi_round_trip(u in -1e6f64..1e6, alpha in 1.05f64..6.0) {
        let v = phi(u, alpha).unwrap();
        let back = phi_inv(v, alpha).unwrap();
        prop_assert!((back - u).abs() <= 1e-12 * u.abs().max(1e-300));
        prop_assert_eq!(phi(-u, alpha).unwrap(), -v);
    }

    #[test]
    fn phi_matches_power_oracle(u in 1e-3f64..1e3, alpha in 1.05f64..6.0) {
        prop_assert!(rel(phi(u, alpha).unwrap(), u.powf(alpha - 1.0)) < 1e-14);
        prop_assert!(rel(phi(-u, alpha).unwrap(), -u.powf(alpha - 1.0)) < 1e-14);
    }

    #[test]
    fn conjugate_is_involution(alpha in 1.01f64..50.0) {
        let b = conjugate(alpha).unwrap();
        prop_assert!((1.0 / alpha + 1.0 / b - 1.0).abs() < 1e-12);
        prop_assert!(rel(conjugate(b).unwrap(), alpha) < 1e-12);
    }

    #[test]
    fn structured_eval_matches_direct_formula(
        c in 0.1f64..10.0,
        power in -4.0f64..4.0,
        e1 in -3.0f64..3.0,
        e2 in -3.0f64..3.0,
        t in 20.0f64..1e8,
    ) {
        let f = CoefficientExpr::new(c, power).with_logs([e1, e2]);
        let l1 = t.ln();
        let direct = c * t.powf(power) * l1.powf(e1) * l1.ln().powf(e2);
        prop_assert!(rel(f.eval(t), direct) < 1e-12);
        prop_assert!((f.ln_eval_at_log(t.ln()) - direct.ln()).abs() < 1e-10 * (1.0 + direct.ln().abs()));
    }

    #[test]
    fn derivative_matches_finite_difference(
        power in -3.0f64..3.0,
        e1 in -2.0f64..2.0,
        e2 in -2.0f64..2.0,
        t in 30.0f64..1e6,
    ) {
        let f = CoefficientExpr::new(1.5, power).with_logs([e1, e2]);
        let h = 1e-4 * t;
        let fd = (-f.eval(t + 2.0 * h) + 8.0 * f.eval(t + h) - 8.0 * f.eval(t - h) + f.eval(t - 2.0 * h)) / (12.0 * h);
        prop_assert!((f.deriv(t) - fd).abs() <= 1e-7 * f.eval(t) / t + 1e-9 * fd.abs());
    }

    #[test]
    fn g_form_identity(
        alpha in 1.2f64..4.0,
        dp in -3.0f64..1.0,
        lp in -3.0f64..3.0,
        lr in -3.0f64..3.0,
        t in 20.0f64..1e6,
    ) {
        // When r.power = p.power + α the G-form is an algebraic identity.
        let p = CoefficientExpr::new(2.0, dp).with_logs([lp]);
        let r = CoefficientExpr::new(0.5, dp + alpha).with_logs([lr]);
        let eq = HalfLinearEquation::new(alpha, r, p, DelayMap::proportional(0.5).unwrap(), E).unwrap();
        let beta = alpha / (alpha - 1.0);
        let form = (4.0 * t.ln().powf(lp - lr)).powf(beta - 1.0) / t;
        prop_assert!(rel(g_eval(&eq, t).unwrap(), form) < 1e-10);
    }

    #[test]
    fn algebra_is_pointwise(
        p1 in -2.0f64..2.0, p2 in -2.0f64..2.0, e1 in -2.0f64..2.0, e2 in -2.0f64..2.0,
        k in -3.0f64..3.0, t in 20.0f64..1e5,
    ) {
        let f = CoefficientExpr::new(2.0, p1).with_logs([e1]);
        let g = CoefficientExpr::new(3.0, p2).with_logs([e2, 1.0]);
        prop_assert!(rel(f.mul(&g).eval(t), f.eval(t) * g.eval(t)) < 1e-12);
        prop_assert!(rel(f.powf(k).eval(t), f.eval(t).powf(k)) < 1e-11);
        prop_assert!(rel(f.recip().eval(t), 1.0 / f.eval(t)) < 1e-12);
        prop_assert!(rel(f.times_power(k).eval(t), f.eval(t) * t.powf(k)) < 1e-11);
        prop_assert_eq!(f.mul(&g).rv_index(), Some(p1 + p2));
    }
}

fn lambda_deviations(f: &CoefficientExpr, lambda: f64) -> Vec<f64> {
    let target = lambda.powf(f.rv_index().unwrap());
    [1e3, 1e4, 1e5, 1e6].iter().map(|&t| rel(f.eval(lambda * t) / f.eval(t), target)).collect()
}

#[test]
fn rv_ratio_trends_to_lambda_power() {
    // The 2% bound at 1e6 needs |e ln λ| / ln t small; larger log powers are only trend-checked.
    let tight = [
        CoefficientExpr::new(1.0, 2.0).with_logs([0.1]),
        CoefficientExpr::new(3.0, -3.0).with_logs([-0.15]),
        CoefficientExpr::new(1.0, 0.5).with_logs([0.05, 0.2]),
        CoefficientExpr::constant(4.0),
    ];
    let loose = [
        CoefficientExpr::new(1.0, 2.0).with_logs([2.0]),
        CoefficientExpr::new(3.0, -3.0).with_logs([-2.0]),
        CoefficientExpr::new(1.0, 0.5).with_logs([-1.0, -2.0]),
    ];
    for (k, f) in tight.iter().chain(loose.iter()).enumerate() {
        for lambda in [0.5f64, 2.0, 5.0] {
            let devs = lambda_deviations(f, lambda);
            for w in devs.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "case {k} lambda {lambda}: {devs:?}");
            }
            if k < tight.len() {
                assert!(devs[3] < 0.02, "{devs:?}");
            }
        }
    }
    // Hand value: (1 - ln 2 / ln 1e6)^2 - 1 for ln^2 t at λ = 0.5.
    let l = 1e6f64.ln();
    let exact = 1.0 - (1.0 - 2f64.ln() / l).powi(2);
    assert!((lambda_deviations(&loose[0], 0.5)[3] - exact).abs() < 1e-12);
}

#[test]
fn h_tau_matches_hand_values() {
    let eq = HalfLinearEquation::new(
        2.0,
        CoefficientExpr::new(1.0, -1.0),
        CoefficientExpr::new(1.0, -3.0),
        DelayMap::shift(1.0).unwrap(),
        2.0,
    )
    .unwrap();
    assert!(rel(h_tau_eval(&eq, 10.0).unwrap(), 0.09) < 1e-14);
    let eq = HalfLinearEquation::new(
        2.0,
        CoefficientExpr::constant(1.0),
        CoefficientExpr::new(2.0, -1.5),
        DelayMap::Proportional(1.0),
        1.0,
    )
    .unwrap();
    assert!(eq.is_ode());
    for t in [2.0, 17.0, 400.0] {
        assert!(rel(h_tau_eval(&eq, t).unwrap(), 2.0 * t.powf(-0.5)) < 1e-14);
    }
}

#[test]
fn domain_start_guards_iterated_logs() {
    let p = CoefficientExpr::new(1.0, -1.0).with_logs([-2.0, -1.0]);
    let need = p.min_domain_start();
    assert!(need > E);
    let mk = |a: f64| HalfLinearEquation::new(2.0, CoefficientExpr::new(1.0, 1.0), p.clone(), DelayMap::shift(1.0).unwrap(), a);
    assert!(mk(need * 0.9).is_err());
    assert!(mk(need).is_ok());
}
