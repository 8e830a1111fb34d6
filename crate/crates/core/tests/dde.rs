use hlde_core::dde::{
    classify_trajectory, manufactured_p, residual, solve, ClassLabel, HistorySpec, LimitKind, Monotonicity, SolveStatus,
    SolverOptions, DEFAULT_TAIL_FRACTION,
};
use hlde_core::model::CustomFactor;
use hlde_core::{CoefficientExpr, DelayMap, Error, HalfLinearEquation};

fn t2_fixture() -> HalfLinearEquation {
    HalfLinearEquation::new(2.0, CoefficientExpr::constant(1.0), CoefficientExpr::new(8.0, -2.0), DelayMap::proportional(0.5).unwrap(), 1.0)
        .unwrap()
}

fn counterexample() -> HalfLinearEquation {
    // (4t^2 - 2) e^{1-2t} = e t^2 e^{-2t} (4 - 2/t^2)
    let p = CoefficientExpr::new(std::f64::consts::E, 2.0)
        .with_exp(-2.0, 0.0)
        .with_custom(CustomFactor::new("4-2/t^2", |t| 4.0 - 2.0 / (t * t), |t| 4.0 / (t * t * t)));
    HalfLinearEquation::new(2.0, CoefficientExpr::constant(1.0), p, DelayMap::shift(1.0).unwrap(), 1.0).unwrap()
}

fn gauss() -> HistorySpec {
    HistorySpec::new(|t| (-t * t).exp(), |t| -2.0 * t * (-t * t).exp())
}

#[test]
fn manufactured_square_is_reproduced() {
    let eq = t2_fixture();
    let traj = solve(&eq, &HistorySpec::power(1.0, 2.0), 100.0, &SolverOptions::adaptive(1e-2, 1e-10)).unwrap();
    assert_eq!(traj.status, SolveStatus::Completed);
    for (&t, &y) in traj.ts.iter().zip(&traj.ys) {
        assert!((y - t * t).abs() <= 1e-6 * t * t, "t={t} y={y}");
    }
    assert!(traj.max_quasi_inconsistency() < 1e-12);
}

#[test]
fn counterexample_tracks_gaussian() {
    let eq = counterexample();
    // The decaying solution is unstable against the increasing ones, so the relative
    // check stops at t = 4 and [4, 6] gets an absolute one.
    let traj = solve(&eq, &gauss(), 6.0, &SolverOptions::adaptive(1e-3, 1e-14)).unwrap();
    for (&t, &y) in traj.ts.iter().zip(&traj.ys) {
        let exact = (-t * t).exp();
        if t <= 4.0 {
            assert!((y - exact).abs() <= 1e-6 * exact, "t={t} y={y} exact={exact}");
        }
        assert!((y - exact).abs() <= 1e-12, "t={t}");
    }
}

#[test]
fn ode_mode_euler_equation() {
    let eq = HalfLinearEquation::new(2.0, CoefficientExpr::constant(1.0), CoefficientExpr::new(2.0, -2.0), DelayMap::Proportional(1.0), 1.0)
        .unwrap();
    assert!(eq.is_ode());
    let traj = solve(&eq, &HistorySpec::power(1.0, 2.0), 100.0, &SolverOptions::adaptive(1e-2, 1e-10)).unwrap();
    let y = traj.y_at(100.0).unwrap();
    assert!((y - 1e4).abs() <= 1e-6 * 1e4);
}

#[test]
fn fixed_step_mode_is_fourth_order() {
    let eq = counterexample();
    let e = |h: f64| {
        let traj = solve(&eq, &gauss(), 3.0, &SolverOptions::fixed(h)).unwrap();
        (traj.y_at(3.0).unwrap() - (-9.0_f64).exp()).abs()
    };
    let (e1, e2) = (e(0.1), e(0.05));
    assert!(e1 / e2 > 8.0, "ratio {}", e1 / e2);
}

#[test]
fn step_halving_consistency() {
    let eq = t2_fixture();
    let h = HistorySpec::power(1.0, 1.5);
    let tol = 1e-7;
    let a = solve(&eq, &h, 50.0, &SolverOptions::adaptive(1e-2, tol)).unwrap();
    let b = solve(&eq, &h, 50.0, &SolverOptions::adaptive(1e-2, tol / 10.0)).unwrap();
    let (ya, yb) = (a.y_at(50.0).unwrap(), b.y_at(50.0).unwrap());
    assert!((ya - yb).abs() <= 10.0 * tol * yb.abs());
}

#[test]
fn interpolant_hits_nodes() {
    let traj = solve(&t2_fixture(), &HistorySpec::power(1.0, 2.0), 10.0, &SolverOptions::default()).unwrap();
    for (i, &t) in traj.ts.iter().enumerate() {
        assert_eq!(traj.y_at(t).unwrap(), traj.ys[i]);
    }
}

#[test]
fn manufactured_grid_of_exponents_and_delays() {
    for &alpha in &[1.5, 2.0, 3.0] {
        for &lambda in &[0.3, 0.5, 0.9] {
            let r = CoefficientExpr::constant(1.0);
            let tau = DelayMap::proportional(lambda).unwrap();
            let p = manufactured_p(&r, &tau, 2.0, alpha).unwrap();
            let eq = HalfLinearEquation::new(alpha, r, p, tau, 1.0).unwrap();
            let traj = solve(&eq, &HistorySpec::power(1.0, 2.0), 100.0, &SolverOptions::adaptive(1e-2, 1e-11)).unwrap();
            let y = traj.y_at(100.0).unwrap();
            assert!((y - 1e4).abs() <= 1e-5 * 1e4, "alpha={alpha} lambda={lambda} y={y}");
        }
    }
}

#[test]
fn manufactured_p_examples() {
    let p = manufactured_p(&CoefficientExpr::constant(1.0), &DelayMap::proportional(0.5).unwrap(), 2.0, 2.0).unwrap();
    assert!((p.scale - 8.0).abs() < 1e-12 && (p.power + 2.0).abs() < 1e-12);
    assert!(matches!(
        manufactured_p(&CoefficientExpr::constant(1.0), &DelayMap::Proportional(1.0), 1.0, 3.0),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        manufactured_p(&CoefficientExpr::new(1.0, -1.0), &DelayMap::proportional(0.5).unwrap(), 2.0, 2.0),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn residual_examples() {
    let eq = t2_fixture();
    let grid: Vec<f64> = (0..=1000).map(|i| 1.0 + 0.01 * i as f64).collect();
    let r = residual(&eq, |t| t * t, |t| 2.0 * t, &grid).unwrap();
    assert!(r < 1e-8, "{r}");
    let r = residual(&eq, |t| t, |_| 1.0, &grid).unwrap();
    assert!((r - 4.0 / grid[2]).abs() < 1e-9, "{r}");
    let ce = counterexample();
    let grid: Vec<f64> = (0..=5000).map(|i| 1.0 + 1e-3 * i as f64).collect();
    let r = residual(&ce, |t| (-t * t).exp(), |t| -2.0 * t * (-t * t).exp(), &grid).unwrap();
    assert!(r < 1e-6, "{r}");
    assert!(matches!(residual(&eq, |t| t, |_| 1.0, &grid[..4]), Err(Error::Precondition(_))));
}

#[test]
fn classify_examples() {
    let traj = solve(&t2_fixture(), &HistorySpec::power(1.0, 2.0), 1e4, &SolverOptions::default()).unwrap();
    let c = classify_trajectory(&traj, DEFAULT_TAIL_FRACTION).unwrap();
    assert_eq!(c.monotonicity, Monotonicity::Increasing);
    assert_eq!(c.y_limit, LimitKind::Infinite);
    assert_eq!(c.label, ClassLabel::IInfInf);

    let traj = solve(&counterexample(), &gauss(), 4.0, &SolverOptions::adaptive(1e-3, 1e-14)).unwrap();
    assert_eq!(classify_trajectory(&traj, DEFAULT_TAIL_FRACTION).unwrap().label, ClassLabel::D);
}

#[test]
fn bounded_increasing_solution_is_ib_inf() {
    let e = std::f64::consts::E;
    let eq = HalfLinearEquation::new(
        2.0,
        CoefficientExpr::new(1.0, 2.0).with_logs(vec![2.0]),
        CoefficientExpr::constant(1.0),
        DelayMap::shift(1.0).unwrap(),
        e,
    )
    .unwrap();
    let traj = solve(&eq, &HistorySpec::power(1.0, 1.0), 1e4, &SolverOptions::default()).unwrap();
    assert_eq!(traj.status, SolveStatus::Completed);
    let c = classify_trajectory(&traj, DEFAULT_TAIL_FRACTION).unwrap();
    assert_eq!(c.label, ClassLabel::IBInf, "{c:?}");
}

#[test]
fn label_parse_round_trip() {
    for l in ClassLabel::ALL {
        assert_eq!(ClassLabel::parse(l.as_str()), Some(l));
    }
}
