//! The generalized engines: `s = R_D(t)` when `∫ r^{1-β}` diverges and
//! `s = Q(t) = 1/R_C(t)` when it converges. They cover the critical case `δ = -1`
//! and some coefficients that are not regularly varying.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::integrands::{decide, q_c_log, q_c_surrogate, q_d_log, q_d_surrogate};
use super::rv::pr_holds;
use super::support::{
    cumulative_on, grid, index_close, limit_on_grid, lp_over_lr, observe, predicted_label, rv_config_for, sample, tails_on,
    tail_start, vanishes_structurally, vanishing_trend,
};
use super::{AsymptoticFit, EngineConfig, FormulaId, HypothesisCheck, HypothesisReport, LimitConstants, Theorem, Trace};
use crate::dde::{ClassLabel, Trajectory};
use crate::error::Result;
use crate::math::{abs, exp, ln, powf};
use crate::model::{CoefficientExpr, HalfLinearEquation};
use crate::quad::{build_change_of_variable, ChangeOfVariable, CovMode, Integrand, LogIntegrand};
use crate::rvkit::estimate_rv_index_log;

const EPS: f64 = 1e-12;
const MIN_POINTS: usize = 16;

/// The transformed coefficient `p_D` or `p_C` and its slowly varying part, sampled in `s`.
struct TransformedSamples {
    s: Vec<f64>,
    ln_p: Vec<f64>,
}

/// Geometric `s` grid ending at the horizon and starting four decades below it
/// (or just above `φ(a)`).
fn s_grid(cov: &ChangeOfVariable, cfg: &EngineConfig) -> Result<Vec<f64>> {
    let s_hi = cfg.horizon;
    let s_a = cov.forward(cov.a().max(1e-300))?;
    let s_lo = (s_hi * 1e-4).max(2.0 * s_a).max(1e-300);
    Ok(grid(s_lo, s_hi.max(100.0 * s_lo), 60))
}

/// `ln p̂(s)` where `p̂ = (R^k p r^{β-1}) ∘ φ^{-1}` (`k = 0` for `p_D`, `k = 2` for `p_C`).
fn transformed_p(eq: &HalfLinearEquation, cov: &ChangeOfVariable, ss: &[f64]) -> Result<TransformedSamples> {
    let beta = eq.beta();
    let mut ln_p = Vec::with_capacity(ss.len());
    for &s in ss {
        let x = cov.inverse_log(s)?;
        let base = eq.p().ln_eval_at_log(x) + (beta - 1.0) * eq.r().ln_eval_at_log(x);
        ln_p.push(match cov.mode() {
            CovMode::Divergent => base,
            CovMode::Convergent => base - 2.0 * ln(s),
        });
    }
    Ok(TransformedSamples { s: ss.to_vec(), ln_p })
}

/// `(tau2)` for `τ_i = φ ∘ τ ∘ φ^{-1}`, by the built-in shortcut or numerically.
fn tau2_check(eq: &HalfLinearEquation, cov: &ChangeOfVariable, cfg: &EngineConfig) -> HypothesisCheck {
    let req = "limsup s/tau_i(s) < inf, tau_i' in SV, limsup tau_i' < inf";
    if eq.tau().is_builtin() && pr_holds(eq).is_some() {
        return HypothesisCheck::new("tau2", req, f64::NAN, "tau' constant and bounded, r in RV(delta + alpha)", true);
    }
    let numeric = || -> Result<(bool, f64, String)> {
        let ss = s_grid(cov, cfg)?;
        let mut ratio = Vec::with_capacity(ss.len());
        let mut ln_d = Vec::with_capacity(ss.len());
        for &s in &ss {
            let x = cov.inverse_log(s)?;
            let lt = eq.tau().ln_eval_at_log(x);
            let tau_i = cov.forward_log(lt)?;
            ratio.push(s / tau_i);
            ln_d.push(cov.ln_phi_prime_at_log(lt)? + eq.tau().ln_deriv_at_log(x) - cov.ln_phi_prime_at_log(x)?);
        }
        let n = ratio.len();
        let earlier = ratio[n - 1 - (n - 1).min(60)];
        let bounded = ratio.iter().all(|r| r.is_finite() && *r > 0.0) && ratio[n - 1] <= 1.1 * earlier;
        let est = estimate_rv_index_log(&ss, &ln_d, &rv_config_for(&ss))?;
        let sv = abs(est.index) <= cfg.index_tolerance;
        let detail = format!(
            "s/tau_i: {:.6} (a decade earlier {:.6}); tau_i' index {:.4}, final {:.6}",
            ratio[n - 1],
            earlier,
            est.index,
            exp(ln_d[n - 1])
        );
        Ok((bounded && sv, ratio[n - 1], detail))
    };
    match numeric() {
        Ok((pass, obs, detail)) => HypothesisCheck::new("tau2", req, obs, detail, pass),
        Err(e) => HypothesisCheck::new("tau2", req, f64::NAN, format!("{e}"), false),
    }
}

/// The index and smallness checks on the transformed coefficient.
fn transformed_checks(
    eq: &HalfLinearEquation,
    cov: &ChangeOfVariable,
    cfg: &EngineConfig,
    name: &str,
    target: f64,
    shortcut: Option<(bool, String)>,
    vanish_shortcut: Option<(bool, String)>,
    checks: &mut Vec<HypothesisCheck>,
) {
    let power = match cov.mode() {
        CovMode::Divergent => eq.alpha(),
        CovMode::Convergent => 2.0 - eq.alpha(),
    };
    let numeric = s_grid(cov, cfg).and_then(|ss| transformed_p(eq, cov, &ss));
    let (idx, idx_detail, trace) = match &numeric {
        Ok(ts) => {
            let est = estimate_rv_index_log(&ts.s, &ts.ln_p, &rv_config_for(&ts.s));
            let l: Vec<(f64, f64)> = ts.s.iter().zip(&ts.ln_p).map(|(&s, &lp)| (s, exp(power * ln(s) + lp))).collect();
            match est {
                Ok(e) => (e.index, format!("numerical index {:.6} on s in [{:.3e}, {:.3e}]", e.index, ts.s[0], ts.s[ts.s.len() - 1]), l),
                Err(e) => (f64::NAN, format!("{e}"), l),
            }
        }
        Err(e) => (f64::NAN, format!("{e}"), Vec::new()),
    };
    let req = format!("{name} in RV({target})");
    let numeric_ok = index_close(idx, target, cfg.index_tolerance);
    checks.push(match &shortcut {
        Some((pass, why)) => HypothesisCheck::new(&format!("{name}_index"), &req, idx, format!("exact: {why}; {idx_detail}"), *pass),
        None => HypothesisCheck::new(&format!("{name}_index"), &req, idx, idx_detail, numeric_ok),
    });
    let (trend_pass, last, detail) = vanishing_trend(&trace, cfg.trend_threshold);
    let lname = format!("L_{name}_to_zero");
    checks.push(match &vanish_shortcut {
        Some((pass, why)) => HypothesisCheck::new(&lname, "slowly varying part -> 0", last, format!("exact: {why}; {detail}"), *pass),
        None => HypothesisCheck::new(&lname, "slowly varying part -> 0", last, detail, trend_pass),
    });
}

fn mode_check(cov: &Result<ChangeOfVariable>, want: CovMode) -> HypothesisCheck {
    let (name, req) = match want {
        CovMode::Divergent => ("rdiv", "int_a^inf r^(1-beta) = inf"),
        CovMode::Convergent => ("rconv", "int_a^inf r^(1-beta) < inf"),
    };
    match cov {
        Ok(c) => {
            let other = if want == CovMode::Divergent { "gen2" } else { "gen1" };
            let detail = if c.mode() == want {
                format!("{:?} via {:?}", c.verdict().status, c.verdict().method)
            } else {
                format!("{:?} via {:?}; use {other}", c.verdict().status, c.verdict().method)
            };
            HypothesisCheck::new(name, req, c.verdict().value, detail, c.mode() == want)
        }
        Err(e) => HypothesisCheck::new(name, req, f64::NAN, format!("{e}"), false),
    }
}

/// `L_p` with the first log exponent shifted by `k`: `L_p ln^k t`.
fn with_log_shift(l: &CoefficientExpr, k: f64) -> CoefficientExpr {
    let mut out = l.clone();
    if out.log_powers.is_empty() {
        out.log_powers.push(0.0);
    }
    out.log_powers[0] += k;
    out
}

/// Exact shortcuts for `p_D`: `(pr)` with `δ < -1`, or the critical case with `r = c t^{α-1}`.
fn gen1_shortcuts(eq: &HalfLinearEquation) -> (Option<(bool, String)>, Option<(bool, String)>) {
    let alpha = eq.alpha();
    if let Some(d) = pr_holds(eq) {
        if d < -1.0 - EPS {
            let v = vanishes_structurally(&lp_over_lr(eq.p(), eq.r()));
            return (
                Some((true, String::from("(pr) with delta < -1 gives p_D in RV(-alpha)"))),
                v.map(|v| (v, format!("L_p_D ~ c L_p/L_r, which structurally {}", if v { "vanishes" } else { "does not vanish" }))),
            );
        }
    }
    let r = eq.r();
    let pure_power = r.is_regularly_varying() && r.log_depth() == 0 && abs(r.power - (alpha - 1.0)) < EPS;
    if pure_power && eq.delta().is_some_and(|d| abs(d + 1.0) < EPS) {
        let lp = eq.p().slowly_varying_expr();
        let e1 = lp.log_powers.first().copied().unwrap_or(0.0);
        let to1 = abs(e1 + alpha) < EPS;
        let to2 = vanishes_structurally(&with_log_shift(&lp, alpha)).unwrap_or(false);
        return (
            Some((to1, format!("critical case: L_p o exp in RV({e1}), need -alpha"))),
            Some((to2, format!("critical case: L_p ln^alpha t {} 0", if to2 { "->" } else { "does not tend to" }))),
        );
    }
    (None, None)
}

fn gen2_shortcuts(eq: &HalfLinearEquation) -> (Option<(bool, String)>, Option<(bool, String)>) {
    if let Some(d) = pr_holds(eq) {
        if d > -1.0 + EPS {
            let v = vanishes_structurally(&lp_over_lr(eq.p(), eq.r()));
            return (
                Some((true, String::from("(pr) with delta > -1 gives p_C in RV(alpha - 2)"))),
                v.map(|v| (v, format!("L_p_C ~ c L_p/L_r, which structurally {}", if v { "vanishes" } else { "does not vanish" }))),
            );
        }
    }
    (None, None)
}

pub fn check_hypotheses_gen1(eq: &HalfLinearEquation, cfg: &EngineConfig) -> Result<HypothesisReport> {
    let cov = build_change_of_variable(eq.r(), eq.beta(), eq.a());
    let mut checks = alloc::vec![mode_check(&cov, CovMode::Divergent)];
    let cov = match cov {
        Ok(c) if c.mode() == CovMode::Divergent => c,
        _ => return Ok(HypothesisReport::new(Theorem::Gen1, checks, ClassLabel::Undetermined, 1.0, None)),
    };
    let (idx_short, van_short) = gen1_shortcuts(eq);
    transformed_checks(eq, &cov, cfg, "p_D", -eq.alpha(), idx_short, van_short, &mut checks);
    checks.push(tau2_check(eq, &cov, cfg));
    let q = LogIntegrand(|x| q_d_log(eq, &cov, x));
    let (class, formula) = match decide(q_d_surrogate(eq, &cov), &q, eq.a()) {
        Ok((v, how)) => {
            checks.push(HypothesisCheck::new("int_q_D_classified", "int_a^inf q_D decided", v.value, format!("{:?}: {how}", v.status), true));
            if v.is_convergent() {
                (predicted_label(false, true), Some(FormulaId::TF22))
            } else {
                (predicted_label(false, false), Some(FormulaId::TF11))
            }
        }
        Err(e) => {
            checks.push(HypothesisCheck::new("int_q_D_classified", "int_a^inf q_D decided", f64::NAN, format!("{e}"), false));
            (ClassLabel::Undetermined, None)
        }
    };
    Ok(HypothesisReport::new(Theorem::Gen1, checks, class, 1.0, formula))
}

pub fn check_hypotheses_gen2(eq: &HalfLinearEquation, cfg: &EngineConfig) -> Result<HypothesisReport> {
    let cov = build_change_of_variable(eq.r(), eq.beta(), eq.a());
    let mut checks = alloc::vec![mode_check(&cov, CovMode::Convergent)];
    let cov = match cov {
        Ok(c) if c.mode() == CovMode::Convergent => c,
        _ => return Ok(HypothesisReport::new(Theorem::Gen2, checks, ClassLabel::Undetermined, 0.0, None)),
    };
    let (idx_short, van_short) = gen2_shortcuts(eq);
    transformed_checks(eq, &cov, cfg, "p_C", eq.alpha() - 2.0, idx_short, van_short, &mut checks);
    checks.push(tau2_check(eq, &cov, cfg));
    let q = LogIntegrand(|x| q_c_log(eq, &cov, x));
    let (class, formula) = match decide(q_c_surrogate(eq, &cov), &q, eq.a()) {
        Ok((v, how)) => {
            checks.push(HypothesisCheck::new("int_q_C_classified", "int_a^inf q_C decided", v.value, format!("{:?}: {how}", v.status), true));
            if v.is_convergent() {
                (predicted_label(true, false), Some(FormulaId::TF2C))
            } else {
                (predicted_label(false, false), Some(FormulaId::TF1C))
            }
        }
        Err(e) => {
            checks.push(HypothesisCheck::new("int_q_C_classified", "int_a^inf q_C decided", f64::NAN, format!("{e}"), false));
            (ClassLabel::Undetermined, None)
        }
    };
    Ok(HypothesisReport::new(Theorem::Gen2, checks, class, 0.0, formula))
}

/// Points of the trajectory tail equally spaced in `ln s`, with their `t`.
fn s_tail(traj: &Trajectory, cov: &ChangeOfVariable, cfg: &EngineConfig, per_decade: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (t0, t1) = (tail_start(traj, cfg), traj.t_end());
    let (s0, s1) = (cov.forward(t0)?, cov.forward(t1)?);
    // Short spans (R_D = ln t) still get enough points for the extrapolation.
    let decades = ln(s1 / s0) / core::f64::consts::LN_10;
    let per_decade = per_decade.max((MIN_POINTS as f64 / decades.max(1e-3)) as usize + 1);
    let ss = grid(s0, s1, per_decade);
    let mut ts: Vec<f64> = ss.iter().map(|&s| cov.inverse(s)).collect::<Result<_>>()?;
    // Round-trip noise must not push the ends outside the trajectory.
    let n = ts.len();
    ts[0] = ts[0].max(t0);
    ts[n - 1] = ts[n - 1].min(t1);
    Ok((ss, ts))
}

pub fn verify_gen1(eq: &HalfLinearEquation, traj: &Trajectory, cfg: &EngineConfig) -> Result<AsymptoticFit> {
    let report = check_hypotheses_gen1(eq, cfg)?;
    let observed = observe(traj, &report, cfg)?;
    let formula = report.formula_id.expect("applicable report carries a formula");
    let cov = build_change_of_variable(eq.r(), eq.beta(), eq.a())?;
    let (alpha, beta) = (eq.alpha(), eq.beta());

    let (ss, st) = s_tail(traj, &cov, cfg, 60)?;
    let ln_y = sample(&st, |t| traj.y_at(t).map(ln))?;
    let index = estimate_rv_index_log(&ss, &ln_y, &rv_config_for(&ss)).ok();

    let ts = grid(tail_start(traj, cfg), traj.t_end(), cfg.per_decade);
    let q = LogIntegrand(|x| q_d_log(eq, &cov, x));
    let mut constants = LimitConstants::default();
    let mut smallness = Vec::new();
    let mut spread = None;
    let (metric, trace) = match formula {
        FormulaId::TF11 => {
            let ys = sample(&ts, |t| traj.y_at(t))?;
            let cum = cumulative_on(|s| q.value(s), eq.a(), &ts, cfg.quad_tol)?;
            let mut trace = Vec::with_capacity(ts.len());
            for ((&t, &y), i) in ts.iter().zip(&ys).zip(cum) {
                trace.push((t, (ln(y) - ln(cov.cumulative(t)?)) / ((beta - 1.0) * i)));
            }
            ("(ln y - ln R_D) / ((beta-1) int_a^t q_D)", trace)
        }
        _ => {
            let (_, st_lim) = s_tail(traj, &cov, cfg, cfg.per_decade)?;
            let us_lim = sample(&st_lim, |t| traj.quasi_at(t))?;
            let (m, sp) = limit_on_grid(&us_lim)?;
            constants.m = Some(m);
            spread = Some(sp);
            let us = sample(&ts, |t| traj.quasi_at(t))?;
            let tails = tails_on(&q, &ts, cfg.quad_tol)?;
            let mut trace = Vec::with_capacity(ts.len());
            let mut tr = Vec::with_capacity(ts.len());
            for ((&t, &u), &tail) in ts.iter().zip(&us).zip(&tails) {
                trace.push((t, -ln(u / m) / tail));
                let x = ln(t);
                let lt = eq.tau().ln_eval_at_log(x);
                let ln_tdp = cov.ln_phi_prime_at_log(lt)? + eq.tau().ln_deriv_at_log(x) - cov.ln_phi_prime_at_log(x)?;
                let num = (alpha - 1.0) * ln_tdp
                    + alpha * cov.ln_cumulative_log(x)?
                    + eq.p().ln_eval_at_log(x)
                    + (beta - 1.0) * eq.r().ln_eval_at_log(x);
                tr.push((t, exp(num) / (m - u)));
            }
            smallness.push(Trace::new("trNo2", tr));
            ("-ln(y1/M) / int_t^inf q_D", trace)
        }
    };
    let final_ratio = trace.last().map_or(f64::NAN, |p: &(f64, f64)| p.1);
    Ok(AsymptoticFit {
        theorem: Theorem::Gen1,
        formula_id: formula,
        comparison_metric: metric.into(),
        trace,
        final_ratio,
        limit_constants: constants,
        observed,
        index,
        index_target: 1.0,
        pi_check: None,
        smallness,
        limit_spread: spread,
    })
}

pub fn verify_gen2(eq: &HalfLinearEquation, traj: &Trajectory, cfg: &EngineConfig) -> Result<AsymptoticFit> {
    let report = check_hypotheses_gen2(eq, cfg)?;
    let observed = observe(traj, &report, cfg)?;
    let formula = report.formula_id.expect("applicable report carries a formula");
    let cov = build_change_of_variable(eq.r(), eq.beta(), eq.a())?;
    let (alpha, beta) = (eq.alpha(), eq.beta());
    let k = powf(beta - 1.0, beta - 1.0);

    let (ss, st) = s_tail(traj, &cov, cfg, 60)?;
    let ln_y = sample(&st, |t| traj.y_at(t).map(ln))?;
    let index = estimate_rv_index_log(&ss, &ln_y, &rv_config_for(&ss)).ok();

    let ts = grid(tail_start(traj, cfg), traj.t_end(), cfg.per_decade);
    let ys = sample(&ts, |t| traj.y_at(t))?;
    let q = LogIntegrand(|x| q_c_log(eq, &cov, x));
    let mut constants = LimitConstants::default();
    let mut smallness = Vec::new();
    let mut spread = None;
    let (metric, trace) = match formula {
        FormulaId::TF1C => {
            let cum = cumulative_on(|s| q.value(s), eq.a(), &ts, cfg.quad_tol)?;
            let trace = ts.iter().zip(&ys).zip(cum).map(|((&t, &y), i)| (t, ln(y) / (k * i))).collect();
            ("ln y / ((beta-1)^(beta-1) int_a^t q_C)", trace)
        }
        _ => {
            let (_, st_lim) = s_tail(traj, &cov, cfg, cfg.per_decade)?;
            let ys_lim = sample(&st_lim, |t| traj.y_at(t))?;
            let (n, sp) = limit_on_grid(&ys_lim)?;
            constants.n = Some(n);
            spread = Some(sp);
            let tails = tails_on(&q, &ts, cfg.quad_tol)?;
            let mut trace = Vec::with_capacity(ts.len());
            let mut tr = Vec::with_capacity(ts.len());
            for ((&t, &y), &tail) in ts.iter().zip(&ys).zip(&tails) {
                trace.push((t, -ln(y / n) / (k * tail)));
                let x = ln(t);
                let num = alpha * cov.ln_cumulative_log(x)? + eq.p().ln_eval_at_log(x) + (beta - 1.0) * eq.r().ln_eval_at_log(x);
                tr.push((t, exp(num) / abs(eq.exponents().phi(y - n))));
            }
            smallness.push(Trace::new("trNo1c", tr));
            ("-ln(y/N) / ((beta-1)^(beta-1) int_t^inf q_C)", trace)
        }
    };
    let final_ratio = trace.last().map_or(f64::NAN, |p: &(f64, f64)| p.1);
    Ok(AsymptoticFit {
        theorem: Theorem::Gen2,
        formula_id: formula,
        comparison_metric: metric.into(),
        trace,
        final_ratio,
        limit_constants: constants,
        observed,
        index,
        index_target: 0.0,
        pi_check: None,
        smallness,
        limit_spread: spread,
    })
}
