//! Slowly varying increasing solutions (`δ > -1`).

use alloc::format;

use alloc::vec::Vec;

use super::integrands::{decide, g_integrand};
use super::support::{
    coefficient_grid, cumulative_on, grid, limit_on_grid, lp_over_lr, observe, predicted_label, rv_config_for, sample,
    tail_start, vanishes_structurally, vanishing_trend,
};
use super::{AsymptoticFit, EngineConfig, FormulaId, HypothesisCheck, HypothesisReport, LimitConstants, Theorem, Trace};
use crate::dde::{ClassLabel, Trajectory};
use crate::error::Result;
use crate::math::{abs, ln, powf};
use crate::model::HalfLinearEquation;
use crate::quad::{classify_improper, tail_integral};
use crate::rvkit::{estimate_rv_index_log, pi_class_check, DEFAULT_LAMBDAS};

const EPS: f64 = 1e-12;

/// `(t^{α-1}/r) ∫_a^t p` along the coefficient grid.
pub(crate) fn trintp_trace(eq: &HalfLinearEquation, cfg: &EngineConfig) -> Result<Vec<(f64, f64)>> {
    let ts = coefficient_grid(eq.a(), cfg);
    let cum = cumulative_on(|s| eq.p().eval(s), eq.a(), &ts, 1e-10)?;
    Ok(ts.iter().zip(cum).map(|(&t, c)| (t, powf(t, eq.alpha() - 1.0) / eq.r().eval(t) * c)).collect())
}

/// Check the slowly-varying theorem's hypotheses without integrating anything.
pub fn check_hypotheses_sv(eq: &HalfLinearEquation, cfg: &EngineConfig) -> Result<HypothesisReport> {
    let mut checks = Vec::new();
    let a = eq.a();

    let ip = classify_improper(eq.p(), a);
    checks.push(match ip {
        Ok(v) => HypothesisCheck::new(
            "int_p_divergent",
            "int_a^inf p = inf",
            v.value,
            format!("{:?} via {:?}", v.status, v.method),
            !v.is_convergent(),
        ),
        Err(e) => HypothesisCheck::new("int_p_divergent", "int_a^inf p = inf", f64::NAN, format!("{e}"), false),
    });

    let delta = eq.delta();
    let trace = trintp_trace(eq, cfg)?;
    let (trend_pass, last, detail) = vanishing_trend(&trace, cfg.trend_threshold);
    let exact = match delta {
        Some(d) if d > -1.0 + EPS && eq.r().is_regularly_varying() => {
            vanishes_structurally(&eq.p().mul(&eq.r().recip()).times_power(eq.alpha()))
        }
        _ => None,
    };
    checks.push(match exact {
        Some(pass) => HypothesisCheck::new(
            "trintp",
            "t^(a-1)/r * int_a^t p -> 0",
            last,
            format!("exact: t^alpha p/r structurally {}; {detail}", if pass { "vanishes" } else { "does not vanish" }),
            pass,
        ),
        None => HypothesisCheck::new("trintp", "t^(a-1)/r * int_a^t p -> 0", last, detail, trend_pass),
    });

    checks.push(HypothesisCheck::new(
        "p_rv_delta",
        "p in RV(delta), delta > -1",
        delta.unwrap_or(f64::NAN),
        if delta.is_some() { "structural index" } else { "p is not structurally regularly varying" },
        delta.is_some_and(|d| d > -1.0 + EPS),
    ));

    if let (Some(d), Some(g)) = (delta, eq.gamma()) {
        checks.push(HypothesisCheck::new(
            "gamma_ge_alpha_plus_delta",
            "gamma >= alpha + delta",
            g - eq.alpha() - d,
            format!("gamma = {g}, alpha + delta = {}", eq.alpha() + d),
            g >= eq.alpha() + d - EPS,
        ));
    }

    let g_expr = g_integrand(eq);
    let surrogate = g_expr.is_regularly_varying().then(|| g_expr.clone());
    let ln_g = crate::quad::LogIntegrand(|x| eq.ln_g_at_log(x));
    let (class, formula) = match decide(surrogate, &ln_g, a) {
        Ok((v, how)) => {
            checks.push(HypothesisCheck::new(
                "int_G_classified",
                "int_a^inf G decided",
                v.value,
                format!("{:?}: {how}", v.status),
                true,
            ));
            if v.is_convergent() {
                (predicted_label(true, false), Some(FormulaId::F2))
            } else {
                (predicted_label(false, false), Some(FormulaId::F1))
            }
        }
        Err(e) => {
            checks.push(HypothesisCheck::new("int_G_classified", "int_a^inf G decided", f64::NAN, format!("{e}"), false));
            (ClassLabel::Undetermined, None)
        }
    };
    let (class, formula) = if delta.is_some_and(|d| d > -1.0 + EPS) { (class, formula) } else { (ClassLabel::Undetermined, None) };
    Ok(HypothesisReport::new(Theorem::Sv, checks, class, 0.0, formula))
}

/// Compare a trajectory with the slowly-varying formulas.
pub fn verify_sv(eq: &HalfLinearEquation, traj: &Trajectory, cfg: &EngineConfig) -> Result<AsymptoticFit> {
    let report = check_hypotheses_sv(eq, cfg)?;
    let observed = observe(traj, &report, cfg)?;
    let formula = report.formula_id.expect("applicable report carries a formula");
    let delta = eq.delta().expect("applicable report has a structural delta");
    let (alpha, beta) = (eq.alpha(), eq.beta());
    let c = eq.exponents().phi_inv(delta + 1.0);
    let t0 = tail_start(traj, cfg);
    let t1 = traj.t_end();

    let idx_grid = grid(t0, t1, 60);
    let ln_y = sample(&idx_grid, |t| traj.y_at(t).map(ln))?;
    let index = estimate_rv_index_log(&idx_grid, &ln_y, &rv_config_for(&idx_grid))?;

    let ts = grid(t0, t1, cfg.per_decade);
    let ys = sample(&ts, |t| traj.y_at(t))?;
    let g = g_integrand(eq);
    let mut constants = LimitConstants::default();
    let mut smallness = Vec::new();
    let mut spread = None;
    let (metric, trace) = match formula {
        FormulaId::F1 => {
            let cum = cumulative_on(|s| g.eval(s), eq.a(), &ts, cfg.quad_tol)?;
            let trace = ts.iter().zip(&ys).zip(cum).map(|((&t, &y), i)| (t, ln(y) / (i / c))).collect();
            ("ln y / (int_a^t G / Phi^-1(delta+1))", trace)
        }
        _ => {
            let (n, sp) = limit_on_grid(&ys)?;
            constants.n = Some(n);
            spread = Some(sp);
            let mut trace = Vec::with_capacity(ts.len());
            for (&t, &y) in ts.iter().zip(&ys) {
                let tail = tail_integral(&g, t, cfg.quad_tol)?.value;
                trace.push((t, (n - y) * c / (n * tail)));
            }
            let gamma = eq.gamma();
            if gamma.is_some_and(|g| abs(g - alpha - delta) < EPS) {
                let l = lp_over_lr(eq.p(), eq.r());
                let lln = ts.iter().zip(&ys).map(|(&t, &y)| (t, powf(l.eval(t), beta - 1.0) / (n - y))).collect();
                smallness.push(Trace::new("LLN", lln));
            }
            ("(N - y) Phi^-1(delta+1) / (N int_t^inf G)", trace)
        }
    };

    let pi_check = if eq.gamma().is_some_and(|g| abs(g - alpha - delta) < EPS) && t1 / 4.0 > 10.0 * t0 {
        let pg = grid(t0, t1 / 4.0, cfg.per_decade);
        let y = |t: f64| traj.y_ext(t).unwrap_or(f64::NAN);
        let w = |t: f64| t * traj.y_prime_ext(t).unwrap_or(f64::NAN);
        Some(pi_class_check(y, w, &pg, &DEFAULT_LAMBDAS, cfg.pi_tolerance)?)
    } else {
        None
    };

    let final_ratio = trace.last().map_or(f64::NAN, |p: &(f64, f64)| p.1);
    Ok(AsymptoticFit {
        theorem: Theorem::Sv,
        formula_id: formula,
        comparison_metric: metric.into(),
        trace,
        final_ratio,
        limit_constants: constants,
        observed,
        index: Some(index),
        index_target: 0.0,
        pi_check,
        smallness,
        limit_spread: spread,
    })
}

