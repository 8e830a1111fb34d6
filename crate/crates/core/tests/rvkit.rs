use hlde_core::rvkit::*;
use hlde_core::CoefficientExpr;
use proptest::prelude::*;
use std::f64::consts::E;

fn sample(grid: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.iter().map(|&t| f(t)).collect()
}

fn grid() -> Vec<f64> {
    log_grid(1e3, 1e6, 60).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scale_invariance(power in -4.0f64..4.0, e in -3.0f64..3.0, c in 1e-6f64..1e6) {
        let g = grid();
        let f = CoefficientExpr::new(1.0, power).with_logs([e]);
        let a = estimate_rv_index(&g, &sample(&g, |t| f.eval(t)), &RvConfig::default()).unwrap();
        let b = estimate_rv_index(&g, &sample(&g, |t| c * f.eval(t)), &RvConfig::default()).unwrap();
        prop_assert!((a.index - b.index).abs() < 1e-9);
        prop_assert_eq!(a.verdict == RvVerdict::Sv, b.verdict == RvVerdict::Sv);
    }

    #[test]
    fn product_rule(t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, e1 in -0.5f64..0.5, e2 in -0.5f64..0.5) {
        let g = grid();
        let cfg = RvConfig::default();
        let f1 = CoefficientExpr::new(2.0, t1).with_logs([e1]);
        let f2 = CoefficientExpr::new(0.5, t2).with_logs([e2]);
        let i1 = estimate_rv_index(&g, &sample(&g, |t| f1.eval(t)), &cfg).unwrap();
        let i2 = estimate_rv_index(&g, &sample(&g, |t| f2.eval(t)), &cfg).unwrap();
        let i12 = estimate_rv_index(&g, &sample(&g, |t| f1.eval(t) * f2.eval(t)), &cfg).unwrap();
        // Log-linear in the samples, so the combined estimate is additive up to roundoff.
        prop_assert!((i12.index - i1.index - i2.index).abs() <= 1e-9 + i1.stderr + i2.stderr);
        // And the estimate lands near θ₁+θ₂ with the log corrections bounded by |e|/ln t.
        prop_assert!((i12.index - t1 - t2).abs() < (e1.abs() + e2.abs()) / 1e5f64.ln() + 1e-9);
    }

    #[test]
    fn power_rule(power in -3.0f64..3.0, e in -1.0f64..1.0, c in -3.0f64..3.0) {
        let g = grid();
        let cfg = RvConfig::default();
        let f = CoefficientExpr::new(1.5, power).with_logs([e]);
        let i = estimate_rv_index(&g, &sample(&g, |t| f.eval(t)), &cfg).unwrap();
        let ic = estimate_rv_index(&g, &sample(&g, |t| f.eval(t).powf(c)), &cfg).unwrap();
        prop_assert!((ic.index - c * i.index).abs() < 1e-9 * (1.0 + c.abs()));
    }

    #[test]
    fn composition_with_linear_maps(e1 in -2.0f64..2.0, m2 in 0.0f64..2.0, power in -2.0f64..2.0) {
        // f ∘ g ~ f for SV f and g(t) = t − 5 or 0.7t; and the index survives g(t) = λt.
        // Same-sign log powers, so the two corrections do not cancel and the trend is monotone.
        let e2 = m2 * e1.signum();
        let l = CoefficientExpr::new(1.0, 0.0).with_logs([e1, e2]);
        let devs: Vec<f64> = [1e3, 1e4, 1e5, 1e6].iter().map(|&t| (l.eval(0.7 * t) / l.eval(t) - 1.0).abs()).collect();
        prop_assert!(devs.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!((l.eval(1e6 - 5.0) / l.eval(1e6) - 1.0).abs() < 1e-6);
        let g = grid();
        let f = CoefficientExpr::new(1.0, power).with_logs([e1]);
        let a = estimate_rv_index(&g, &sample(&g, |t| f.eval(t)), &RvConfig::default()).unwrap();
        let b = estimate_rv_index(&g, &sample(&g, |t| f.eval(0.7 * t)), &RvConfig::default()).unwrap();
        prop_assert!((a.index - b.index).abs() < e1.abs() * 0.36 / 1e5f64.ln().powi(2) + 1e-9);
    }

    #[test]
    fn representation_of_powers(rho in -5.0f64..5.0) {
        let g = log_grid(10.0, 1e4, 20).unwrap();
        for (_, w) in representation_trace(|t| t.powf(rho), |t| rho * t.powf(rho - 1.0), &g).unwrap() {
            prop_assert!((w - rho).abs() < 1e-12 * (1.0 + rho.abs()));
        }
    }

    #[test]
    fn integral_is_nrv_one_up(theta in -0.5f64..2.0, e in -1.0f64..1.0) {
        // F(t) = ∫_a^t f' with f' ∈ RV(θ), θ > −1, gives t F'(t)/F(t) → θ + 1.
        let g = log_grid(1e3, 1e6, 20).unwrap();
        let tr = karamata_check(&CoefficientExpr::new(1.0, 0.0).with_logs([e]), theta, KaramataMode::Cumulative, &g, E).unwrap();
        // karamata ratio = F(t)(θ+1)/(t f'(t)), so t F'/F = (θ+1)/ratio.
        let omegas: Vec<f64> = tr.iter().map(|&(_, r)| (theta + 1.0) / r).collect();
        let est = nrv_index_from_trace(&g, &omegas, &RvConfig::default()).unwrap();
        // Log corrections shrink like |e|/ln t, the lower limit like (a/t)^{θ+1}.
        let slack = 2.0 * e.abs() / 1e5f64.ln() + 2.0 * (E / 1e5).powf(theta + 1.0) + 1e-3;
        prop_assert!((est.index - (theta + 1.0)).abs() < slack, "{:?}", est);
    }
}

#[test]
fn spec_index_examples() {
    let g = grid();
    let cfg = RvConfig::default();
    let e = estimate_rv_index(&g, &sample(&g, |t| t.powf(1.5)), &cfg).unwrap();
    assert!((e.index - 1.5).abs() < 0.01);
    assert_eq!(e.verdict, RvVerdict::Rv(e.index));
    let e = estimate_rv_index(&g, &sample(&g, |t| t * t * t.ln()), &cfg).unwrap();
    assert!(e.index >= 2.0 && e.index <= 2.15, "{e:?}");
    // e^{−t²} underflows near t = 27, so the window ends at 20.
    let g = log_grid(1e-2, 20.0, 60).unwrap();
    let e = nrv_index_from_logderivative(|t| (-t * t).exp(), |t| -2.0 * t * (-t * t).exp(), &g, &cfg);
    assert_eq!(e.unwrap().verdict, RvVerdict::NotRv);
    let tr = representation_trace(|t| (-t * t).exp(), |t| -2.0 * t * (-t * t).exp(), &[10.0]).unwrap();
    assert!((tr[0].1 + 200.0).abs() < 1e-9);
}

#[test]
fn log_derivative_of_t2_ln_t() {
    let g = log_grid(1e3, 1e6, 40).unwrap();
    let tr = representation_trace(|t| t * t * t.ln(), |t| 2.0 * t * t.ln() + t, &g).unwrap();
    for &(t, w) in &tr {
        assert!((w - (2.0 + 1.0 / t.ln())).abs() < 1e-12);
    }
    let e = nrv_index_from_logderivative(|t| t * t * t.ln(), |t| 2.0 * t * t.ln() + t, &g, &RvConfig::default()).unwrap();
    assert!(matches!(e.verdict, RvVerdict::Rv(_)));
    assert!((e.index - 2.0).abs() < 0.1);
}

#[test]
fn karamata_closed_forms() {
    let g = log_grid(1e2, 1e6, 20).unwrap();
    let one = CoefficientExpr::constant(1.0);
    for (_, r) in karamata_check(&one, -2.0, KaramataMode::Tail, &g, 1.0).unwrap() {
        assert!((r - 1.0).abs() < 1e-8);
    }
    // ∫_1^t ln s ds = t ln t − t + 1.
    let l = CoefficientExpr::new(1.0, 0.0).with_logs([1.0]);
    let tr = karamata_check(&l, 0.0, KaramataMode::Cumulative, &g, 1.0).unwrap();
    for &(t, r) in &tr {
        assert!((r - (t * t.ln() - t + 1.0) / (t * t.ln())).abs() < 1e-9);
    }
    assert!((tr.last().unwrap().1 - 1.0).abs() < 0.073);
    for &(t, r) in &karamata_check(&one, -1.0, KaramataMode::Critical, &g, 1.0).unwrap() {
        assert!((r - 1.0 / t.ln()).abs() < 1e-9);
    }
}

#[test]
fn pi_class_examples() {
    let g = log_grid(1e2, 1e4, 20).unwrap();
    let r = pi_class_check(|t| t.ln(), |_| 1.0, &g, &DEFAULT_LAMBDAS, 0.05).unwrap();
    assert!(r.holds && r.max_deviation < 1e-12);
    let r = pi_class_check(|t| t.ln().powi(2), |t| 2.0 * t.ln(), &g, &[2.0], 0.05).unwrap();
    let want = 2f64.ln().powi(2) / (2.0 * 1e4f64.ln());
    assert!((r.max_deviation - want).abs() < 1e-9, "{} vs {want}", r.max_deviation);
    assert!(r.holds);
    assert!(!pi_class_check(|t| t, |_| 1.0, &g, &DEFAULT_LAMBDAS, 0.05).unwrap().holds);
    assert!(pi_class_check(|t| t, |_| -1.0, &g, &DEFAULT_LAMBDAS, 0.05).is_err());
}
