//! The integrands `G`, `H_τ`, `q_D`, `q_C` and structured surrogates that share
//! their convergence class.

use alloc::format;
use alloc::string::String;

use crate::error::Result;
use crate::math::abs;
use crate::model::{CoefficientExpr, DelayMap, HalfLinearEquation};
use crate::quad::{classify_improper, ChangeOfVariable, CovMode, ImproperVerdict, Integrand, LogIntegrand};

/// `G = (t p / r)^{β-1}`.
pub fn g_integrand(eq: &HalfLinearEquation) -> CoefficientExpr {
    eq.g_expr()
}

/// `H_τ` through its logarithm, stable for huge `t`.
pub fn h_tau_integrand(eq: &HalfLinearEquation) -> LogIntegrand<impl Fn(f64) -> f64 + '_> {
    LogIntegrand(move |x| eq.ln_h_tau_at_log(x))
}

/// `ln q_D(e^x)` with `q_D = ((τ_D' ∘ R_D) R_D)^{α-1} p`.
pub fn q_d_log(eq: &HalfLinearEquation, cov: &ChangeOfVariable, x: f64) -> f64 {
    let Ok(ln_rd) = cov.ln_cumulative_log(x) else { return f64::NAN };
    let lt = eq.tau().ln_eval_at_log(x);
    let ln_dens = |y: f64| (1.0 - eq.beta()) * eq.r().ln_eval_at_log(y);
    let ln_tau_d_prime = ln_dens(lt) + eq.tau().ln_deriv_at_log(x) - ln_dens(x);
    (eq.alpha() - 1.0) * (ln_rd + ln_tau_d_prime) + eq.p().ln_eval_at_log(x)
}

/// `ln q_C(e^x)` with `q_C = (R_C p r^{β-2})^{β-1}`.
pub fn q_c_log(eq: &HalfLinearEquation, cov: &ChangeOfVariable, x: f64) -> f64 {
    let Ok(ln_rc) = cov.ln_cumulative_log(x) else { return f64::NAN };
    (eq.beta() - 1.0) * (ln_rc + eq.p().ln_eval_at_log(x) + (eq.beta() - 2.0) * eq.r().ln_eval_at_log(x))
}

/// Structured `H̃ ≍ H_τ` for built-in delays and regularly varying coefficients.
pub(crate) fn h_tau_surrogate(eq: &HalfLinearEquation) -> Option<CoefficientExpr> {
    let gamma = eq.r().rv_index()?;
    eq.p().rv_index()?;
    let base = eq.p().mul(&eq.r().recip()).times_power(eq.alpha() - 1.0);
    match eq.tau() {
        DelayMap::Shift(_) => Some(base),
        DelayMap::Proportional(l) => Some(base.scaled(crate::math::powf(*l, eq.alpha() - 1.0 - gamma))),
        DelayMap::Custom(_) => None,
    }
}

/// Karamata surrogate of `R_D` (divergent) or `R_C` (convergent) for a structured density.
pub(crate) fn cumulative_surrogate(dens: &CoefficientExpr, mode: CovMode) -> Option<CoefficientExpr> {
    if !dens.is_regularly_varying() {
        return None;
    }
    let theta = dens.power;
    let e1 = dens.log_powers.first().copied().unwrap_or(0.0);
    let critical = abs(theta + 1.0) < 1e-12;
    let with_log = |c: f64| {
        let mut out = dens.times_power(1.0);
        if out.log_powers.is_empty() {
            out.log_powers.push(0.0);
        }
        out.log_powers[0] += 1.0;
        out.scaled(1.0 / c)
    };
    match mode {
        CovMode::Divergent if theta > -1.0 && !critical => Some(dens.times_power(1.0).scaled(1.0 / (theta + 1.0))),
        CovMode::Divergent if critical && e1 > -1.0 + 1e-12 => Some(with_log(e1 + 1.0)),
        CovMode::Convergent if theta < -1.0 && !critical => Some(dens.times_power(1.0).scaled(1.0 / (-theta - 1.0))),
        CovMode::Convergent if critical && e1 < -1.0 - 1e-12 => Some(with_log(-e1 - 1.0)),
        _ => None,
    }
}

/// `q̃_D = R̃_D^{α-1} p`; the ratio `τ_D' ∘ R_D` tends to a positive constant for built-in delays.
pub(crate) fn q_d_surrogate(eq: &HalfLinearEquation, cov: &ChangeOfVariable) -> Option<CoefficientExpr> {
    if !eq.tau().is_builtin() || !eq.p().is_regularly_varying() {
        return None;
    }
    let rd = cumulative_surrogate(cov.density(), CovMode::Divergent)?;
    Some(rd.powf(eq.alpha() - 1.0).mul(eq.p()))
}

/// `q̃_C = (R̃_C p r^{β-2})^{β-1}`.
pub(crate) fn q_c_surrogate(eq: &HalfLinearEquation, cov: &ChangeOfVariable) -> Option<CoefficientExpr> {
    if !eq.p().is_regularly_varying() {
        return None;
    }
    let rc = cumulative_surrogate(cov.density(), CovMode::Convergent)?;
    Some(rc.mul(eq.p()).mul(&eq.r().powf(eq.beta() - 2.0)).powf(eq.beta() - 1.0))
}

/// Decide convergence from the surrogate when there is one, else numerically.
pub(crate) fn decide<I: Integrand>(
    surrogate: Option<CoefficientExpr>,
    actual: &I,
    a: f64,
) -> Result<(ImproperVerdict, String)> {
    match surrogate {
        Some(s) => {
            let v = classify_improper(&s, a.max(s.min_domain_start()))?;
            Ok((v, format!("exact rule on structured surrogate (power {}, logs {:?})", s.power, s.log_powers)))
        }
        None => {
            let v = classify_improper(actual, a)?;
            Ok((v, String::from("numerical heuristic")))
        }
    }
}
