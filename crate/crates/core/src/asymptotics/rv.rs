//! Regularly varying increasing solutions (`δ < -1`), index `ρ = (-1-δ)/(α-1)`.

use alloc::format;
use alloc::vec::Vec;

use super::integrands::{decide, h_tau_integrand, h_tau_surrogate};
use super::support::{
    coefficient_grid, cumulative_on, grid, index_close, limit_on_grid, lp_over_lr, observe, predicted_label,
    rv_config_for, sample, tail_start, tau_inverse, vanishes_structurally, vanishing_trend,
};
use super::{AsymptoticFit, EngineConfig, FormulaId, HypothesisCheck, HypothesisReport, LimitConstants, Theorem, Trace};
use crate::dde::{ClassLabel, Trajectory};
use crate::error::Result;
use crate::math::{abs, exp, ln, powf};
use crate::model::HalfLinearEquation;
use crate::quad::{tail_integral, Integrand};
use crate::rvkit::{default_grid, estimate_rv_index_log, pi_class_check, DEFAULT_LAMBDAS};

const EPS: f64 = 1e-12;

/// `ρ = (-1-δ)/(α-1)`.
pub(crate) fn rho(alpha: f64, delta: f64) -> f64 {
    (-1.0 - delta) / (alpha - 1.0)
}

/// Whether `p ∈ RV(δ)` and `r ∈ RV(δ+α)` hold structurally.
pub(crate) fn pr_holds(eq: &HalfLinearEquation) -> Option<f64> {
    let (d, g) = (eq.delta()?, eq.gamma()?);
    (abs(g - d - eq.alpha()) < EPS).then_some(d)
}

/// First point where `H_τ` is defined: `τ(t)` must lie in the domain of `r`.
pub(crate) fn h_tau_start(eq: &HalfLinearEquation) -> f64 {
    let need = eq.r().min_domain_start();
    if need > 0.0 && eq.tau().eval(eq.a()) < need {
        tau_inverse(eq.tau(), need * (1.0 + 1e-9))
    } else {
        eq.a()
    }
}

pub fn check_hypotheses_rv(eq: &HalfLinearEquation, cfg: &EngineConfig) -> Result<HypothesisReport> {
    let mut checks = Vec::new();
    let (alpha, beta) = (eq.alpha(), eq.beta());
    let pr = pr_holds(eq);
    checks.push(HypothesisCheck::new(
        "pr",
        "p in RV(delta), r in RV(delta + alpha)",
        eq.gamma().zip(eq.delta()).map_or(f64::NAN, |(g, d)| g - d - alpha),
        format!("structural indices delta = {:?}, gamma = {:?}", eq.delta(), eq.gamma()),
        pr.is_some(),
    ));
    let delta = eq.delta();
    checks.push(HypothesisCheck::new(
        "delta_lt_minus_one",
        "delta < -1",
        delta.unwrap_or(f64::NAN),
        "structural index of p",
        delta.is_some_and(|d| d < -1.0 - EPS),
    ));

    // First tau-add condition: (r^{1-β} ∘ τ) τ' ∈ RV(δ(1-β) - β).
    let target = delta.map_or(f64::NAN, |d| d * (1.0 - beta) - beta);
    if eq.tau().is_builtin() && pr.is_some() {
        checks.push(HypothesisCheck::new(
            "tau_add_index",
            "(r^(1-beta) o tau) tau' in RV(delta(1-beta) - beta)",
            target,
            "tau' constant hence slowly varying, r in RV(delta + alpha)",
            true,
        ));
    } else {
        let g = default_grid();
        let lv: Vec<f64> = g
            .iter()
            .map(|&t| (1.0 - beta) * eq.r().ln_eval(eq.tau().eval(t)) + ln(eq.tau().deriv(t)))
            .collect();
        let (obs, detail) = match estimate_rv_index_log(&g, &lv, &Default::default()) {
            Ok(e) => (e.index, format!("numerical index {:.6} (stderr {:.2e})", e.index, e.stderr)),
            Err(e) => (f64::NAN, format!("{e}")),
        };
        checks.push(HypothesisCheck::new(
            "tau_add_index",
            "(r^(1-beta) o tau) tau' in RV(delta(1-beta) - beta)",
            obs,
            detail,
            index_close(obs, target, cfg.index_tolerance),
        ));
    }

    // Second tau-add condition: (L_p/L_r)^{β-1} τ' → 0.
    let l = lp_over_lr(eq.p(), eq.r());
    let ts = coefficient_grid(eq.a(), cfg);
    let trace: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| (t, exp((beta - 1.0) * l.ln_eval(t)) * eq.tau().deriv(t)))
        .collect();
    let (trend_pass, last, detail) = vanishing_trend(&trace, cfg.trend_threshold);
    match (eq.tau().is_builtin() && pr.is_some(), vanishes_structurally(&l)) {
        (true, Some(v)) => checks.push(HypothesisCheck::new(
            "tau_add_trend",
            "(L_p/L_r)^(beta-1) tau' -> 0",
            last,
            format!("exact: L_p/L_r structurally {}, tau' bounded; {detail}", if v { "vanishes" } else { "does not vanish" }),
            v,
        )),
        _ => checks.push(HypothesisCheck::new("tau_add_trend", "(L_p/L_r)^(beta-1) tau' -> 0", last, detail, trend_pass)),
    }

    let h = h_tau_integrand(eq);
    let (class, formula) = match decide(h_tau_surrogate(eq), &h, h_tau_start(eq)) {
        Ok((v, how)) => {
            checks.push(HypothesisCheck::new("int_H_tau_classified", "int_a^inf H_tau decided", v.value, format!("{:?}: {how}", v.status), true));
            if v.is_convergent() {
                (predicted_label(false, true), Some(FormulaId::F21))
            } else {
                (predicted_label(false, false), Some(FormulaId::F11))
            }
        }
        Err(e) => {
            checks.push(HypothesisCheck::new("int_H_tau_classified", "int_a^inf H_tau decided", f64::NAN, format!("{e}"), false));
            (ClassLabel::Undetermined, None)
        }
    };
    let index = delta.map_or(f64::NAN, |d| rho(alpha, d));
    Ok(HypothesisReport::new(Theorem::Rv, checks, class, index, formula))
}

pub fn verify_rv(eq: &HalfLinearEquation, traj: &Trajectory, cfg: &EngineConfig) -> Result<AsymptoticFit> {
    let report = check_hypotheses_rv(eq, cfg)?;
    let observed = observe(traj, &report, cfg)?;
    let formula = report.formula_id.expect("applicable report carries a formula");
    let (alpha, beta) = (eq.alpha(), eq.beta());
    let delta = eq.delta().expect("applicable report has a structural delta");
    let rho = report.predicted_index;
    let t0 = tail_start(traj, cfg);
    let t1 = traj.t_end();

    let idx_grid = grid(t0, t1, 60);
    let ln_y = sample(&idx_grid, |t| traj.y_at(t).map(ln))?;
    let index = estimate_rv_index_log(&idx_grid, &ln_y, &rv_config_for(&idx_grid))?;

    let ts = grid(t0, t1, cfg.per_decade);
    let ys = sample(&ts, |t| traj.y_at(t))?;
    let us = sample(&ts, |t| traj.quasi_at(t))?;
    let h = h_tau_integrand(eq);
    let ah = h_tau_start(eq);
    let dens = |t: f64| powf(eq.r().eval(t), 1.0 - beta);
    let mut constants = LimitConstants::default();
    let mut smallness = Vec::new();
    let mut spread = None;
    let (metric, trace) = match formula {
        FormulaId::F11 => {
            let cum = cumulative_on(|s| h.value(s), ah, &ts, cfg.quad_tol)?;
            let k = (beta - 1.0) / eq.exponents().phi(rho);
            let trace = ts
                .iter()
                .zip(&ys)
                .zip(cum)
                .map(|((&t, &y), i)| (t, (ln(y) - ln(t * dens(t))) / (k * i)))
                .collect();
            ("(ln y - ln(t r^(1-beta))) / ((beta-1)/Phi(rho) int_a^t H_tau)", trace)
        }
        _ => {
            let (m, sp) = limit_on_grid(&us)?;
            constants.m = Some(m);
            spread = Some(sp);
            let k = powf(rho, alpha - 1.0);
            let mut trace = Vec::with_capacity(ts.len());
            for (&t, &u) in ts.iter().zip(&us) {
                let tail = tail_integral(&h, t, cfg.quad_tol)?.value;
                trace.push((t, -ln(u / m) * k / tail));
            }
            let l = lp_over_lr(eq.p(), eq.r());
            let llm = ts
                .iter()
                .zip(&us)
                .map(|(&t, &u)| {
                    let tau = eq.tau().eval(t);
                    let v = powf(t / tau, delta + alpha) * powf(eq.tau().deriv(t), alpha - 1.0) * l.eval(t) / (m - u);
                    (t, v)
                })
                .collect();
            smallness.push(Trace::new("LLM", llm));
            constants.a = fit_additive_constant(eq, traj, m, rho, ah, cfg).ok();
            ("-ln(y1/M) rho^(alpha-1) / int_t^inf H_tau", trace)
        }
    };

    let pi_check = if t1 / 4.0 > 10.0 * t0 {
        let pg = grid(t0, t1 / 4.0, cfg.per_decade);
        let f = |t: f64| traj.quasi_ext(t).unwrap_or(f64::NAN);
        let w = |t: f64| {
            let yt = traj.y_ext(eq.tau().eval(t)).unwrap_or(f64::NAN);
            t * eq.p().eval(t) * eq.exponents().phi(yt)
        };
        Some(pi_class_check(f, w, &pg, &DEFAULT_LAMBDAS, cfg.pi_tolerance)?)
    } else {
        None
    };

    let final_ratio = trace.last().map_or(f64::NAN, |p: &(f64, f64)| p.1);
    Ok(AsymptoticFit {
        theorem: Theorem::Rv,
        formula_id: formula,
        comparison_metric: metric.into(),
        trace,
        final_ratio,
        limit_constants: constants,
        observed,
        index: Some(index),
        index_target: rho,
        pi_check,
        smallness,
        limit_spread: spread,
    })
}

/// Least-squares `A` in `y ≈ A + ∫_a^t M^{β-1} r^{1-β} exp{-(β-1)/ρ^{α-1} ∫_s^∞ H_τ} ds` over the tail.
fn fit_additive_constant(
    eq: &HalfLinearEquation,
    traj: &Trajectory,
    m: f64,
    rho: f64,
    ah: f64,
    cfg: &EngineConfig,
) -> Result<f64> {
    let beta = eq.beta();
    let h = h_tau_integrand(eq);
    let t1 = traj.t_end();
    let lo = ah.max(traj.t_start());
    let ts = grid(lo, t1, 40);
    let n = ts.len();
    let mut tails = alloc::vec![0.0; n];
    tails[n - 1] = tail_integral(&h, ts[n - 1], cfg.quad_tol)?.value;
    for i in (0..n - 1).rev() {
        tails[i] = tails[i + 1] + crate::quad::integrate(|s| h.value(s), ts[i], ts[i + 1], cfg.quad_tol)?.value;
    }
    let k = (beta - 1.0) / powf(rho, eq.alpha() - 1.0);
    let f: Vec<f64> = ts
        .iter()
        .zip(&tails)
        .map(|(&t, &tail)| powf(m, beta - 1.0) * powf(eq.r().eval(t), 1.0 - beta) * exp(-k * tail) * t)
        .collect();
    // Trapezoid in ln t from the start of the trajectory.
    let mut big_f = alloc::vec![0.0; n];
    for i in 1..n {
        big_f[i] = big_f[i - 1] + 0.5 * (f[i] + f[i - 1]) * ln(ts[i] / ts[i - 1]);
    }
    let t0 = tail_start(traj, cfg);
    let diffs: Vec<f64> = ts
        .iter()
        .zip(&big_f)
        .filter(|(t, _)| **t >= t0)
        .filter_map(|(&t, &bf)| traj.y_at(t).map(|y| y - bf))
        .collect();
    Ok(diffs.iter().sum::<f64>() / diffs.len().max(1) as f64)
}
