//! The equation tuple `(α, r, p, τ, a)`.

use alloc::format;

use super::{CoefficientExpr, DelayMap, Exponents};
use crate::error::{domain, invalid, Error, Result};
use crate::math::{exp, geomspace, ln, powf};

#[derive(Clone, Debug)]
pub struct HalfLinearEquation {
    exponents: Exponents,
    r: CoefficientExpr,
    p: CoefficientExpr,
    tau: DelayMap,
    a: f64,
}

impl HalfLinearEquation {
    pub fn new(alpha: f64, r: CoefficientExpr, p: CoefficientExpr, tau: DelayMap, a: f64) -> Result<Self> {
        let exponents = Exponents::new(alpha)?;
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid(format!("left endpoint must be positive, got {a}")));
        }
        r.validate()?;
        p.validate()?;
        for (name, c) in [("r", &r), ("p", &p)] {
            let need = c.min_domain_start();
            if a < need * (1.0 - 1e-12) {
                return Err(invalid(format!(
                    "left endpoint {a} too small for the iterated logarithms of {name}; need a >= {need}"
                )));
            }
        }
        let samples = geomspace(a, a * 1e3 + 100.0, 200);
        for (name, c) in [("r", &r), ("p", &p)] {
            // Only the opaque factor can change sign; structured parts may underflow harmlessly.
            if let Some(f) = &c.custom {
                for &t in &samples {
                    let v = f.value(t);
                    if !(v.is_finite() && v > 0.0) {
                        return Err(domain(format!("{name}({t}) = {v} is not positive")));
                    }
                }
            }
        }
        if !tau.is_identity() {
            for &t in &samples {
                let (v, d) = (tau.eval(t), tau.deriv(t));
                if !(v < t) {
                    return Err(Error::UnsupportedDelay(format!("tau({t}) = {v} is not below t")));
                }
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::UnsupportedDelay(format!("tau'({t}) = {d} is not positive")));
                }
            }
        }
        Ok(Self { exponents, r, p, tau, a })
    }

    pub fn exponents(&self) -> Exponents {
        self.exponents
    }

    pub fn alpha(&self) -> f64 {
        self.exponents.alpha()
    }

    pub fn beta(&self) -> f64 {
        self.exponents.beta()
    }

    pub fn r(&self) -> &CoefficientExpr {
        &self.r
    }

    pub fn p(&self) -> &CoefficientExpr {
        &self.p
    }

    pub fn tau(&self) -> &DelayMap {
        &self.tau
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn is_ode(&self) -> bool {
        self.tau.is_identity()
    }

    /// Structural index δ of `p`.
    pub fn delta(&self) -> Option<f64> {
        self.p.rv_index()
    }

    /// Structural index γ of `r`.
    pub fn gamma(&self) -> Option<f64> {
        self.r.rv_index()
    }

    /// `G = (t p / r)^{β-1}` as a coefficient expression.
    pub fn g_expr(&self) -> CoefficientExpr {
        self.p.mul(&self.r.recip()).times_power(1.0).powf(self.beta() - 1.0)
    }

    /// `ln G(e^x)`.
    pub fn ln_g_at_log(&self, x: f64) -> f64 {
        (self.beta() - 1.0) * (x + self.p.ln_eval_at_log(x) - self.r.ln_eval_at_log(x))
    }

    /// `ln H_τ(e^x)`; stays finite where the coefficients themselves overflow.
    pub fn ln_h_tau_at_log(&self, x: f64) -> f64 {
        let lt = self.tau.ln_eval_at_log(x);
        (self.alpha() - 1.0) * (x + self.tau.ln_deriv_at_log(x)) + self.p.ln_eval_at_log(x)
            - self.r.ln_eval_at_log(lt)
    }

    pub(crate) fn check_t(&self, t: f64) -> Result<()> {
        if t >= self.a * (1.0 - 1e-12) && t.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("t = {t} lies before the left endpoint {}", self.a)))
        }
    }
}

/// `G(t) = Φ^{-1}(t p(t)/r(t))`.
pub fn g_eval(eq: &HalfLinearEquation, t: f64) -> Result<f64> {
    eq.check_t(t)?;
    let (p, r) = (eq.p.eval(t), eq.r.eval(t));
    if !(r > 0.0 && p > 0.0 && r.is_finite() && p.is_finite()) {
        return Err(domain(format!("coefficients not positive at t = {t}: r = {r}, p = {p}")));
    }
    let v = powf(t * p / r, eq.beta() - 1.0);
    if v.is_finite() {
        Ok(v)
    } else {
        Ok(exp(eq.ln_g_at_log(ln(t))))
    }
}

/// `H_τ(t) = (t τ'(t))^{α-1} p(t)/r(τ(t))`.
pub fn h_tau_eval(eq: &HalfLinearEquation, t: f64) -> Result<f64> {
    eq.check_t(t)?;
    let tt = eq.tau.eval(t);
    if tt < eq.r.min_domain_start() * (1.0 - 1e-12) || tt <= 0.0 {
        return Err(domain(format!("tau({t}) = {tt} lies outside the domain of r")));
    }
    let (p, rt) = (eq.p.eval(t), eq.r.eval(tt));
    if !(rt > 0.0 && p > 0.0 && rt.is_finite() && p.is_finite()) {
        return Err(domain(format!("coefficients not positive at t = {t}: r(tau) = {rt}, p = {p}")));
    }
    Ok(powf(t * eq.tau.deriv(t), eq.alpha() - 1.0) * p / rt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::E;

    fn scenario3() -> HalfLinearEquation {
        HalfLinearEquation::new(
            2.0,
            CoefficientExpr::new(1.0, 2.0).with_logs([2.0]),
            CoefficientExpr::constant(1.0),
            DelayMap::shift(1.0).unwrap(),
            E,
        )
        .unwrap()
    }

    #[test]
    fn g_examples() {
        assert!((g_eval(&scenario3(), E).unwrap() - 1.0 / E).abs() < 1e-14);
        let eq = HalfLinearEquation::new(
            2.0,
            CoefficientExpr::new(1.0, -1.0),
            CoefficientExpr::new(1.0, -3.0),
            DelayMap::shift(1.0).unwrap(),
            2.0,
        )
        .unwrap();
        assert!((g_eval(&eq, 10.0).unwrap() - 0.1).abs() < 1e-14);
        assert!((h_tau_eval(&eq, 10.0).unwrap() - 0.09).abs() < 1e-14);
        assert!(g_eval(&eq, 1.0).is_err());
    }

    #[test]
    fn g_is_one_when_p_equals_r_over_t() {
        let eq = HalfLinearEquation::new(
            3.0,
            CoefficientExpr::new(2.0, 1.5).with_logs([1.0]),
            CoefficientExpr::new(2.0, 0.5).with_logs([1.0]),
            DelayMap::proportional(0.5).unwrap(),
            E,
        )
        .unwrap();
        for t in [3.0, 30.0, 3e5] {
            assert!((g_eval(&eq, t).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn h_tau_identity_delay() {
        let p = CoefficientExpr::new(3.0, -2.5);
        let eq = HalfLinearEquation::new(2.0, CoefficientExpr::constant(1.0), p.clone(), DelayMap::Proportional(1.0), 1.0)
            .unwrap();
        assert!((h_tau_eval(&eq, 7.0).unwrap() - 7.0 * p.eval(7.0)).abs() < 1e-14);
    }

    #[test]
    fn h_tau_example_3_3_ratio() {
        let eq = HalfLinearEquation::new(
            2.0,
            CoefficientExpr::new(1.0, -1.0),
            CoefficientExpr::new(1.0, -3.0).with_logs([-2.0]),
            DelayMap::proportional(0.5).unwrap(),
            E,
        )
        .unwrap();
        // r is a pure power, so the asymptotic form holds exactly.
        for t in [1e2, 1e4, 1e6, 1e8] {
            let approx = 0.25 * t * eq.p().eval(t) / eq.r().eval(t);
            assert!((h_tau_eval(&eq, t).unwrap() / approx - 1.0).abs() < 1e-12);
        }
        assert!((eq.ln_h_tau_at_log(ln(1e4)) - ln(h_tau_eval(&eq, 1e4).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_domains() {
        let r = CoefficientExpr::new(1.0, 2.0).with_logs([2.0]);
        let p = CoefficientExpr::constant(1.0);
        let tau = DelayMap::shift(1.0).unwrap();
        assert!(HalfLinearEquation::new(2.0, r.clone(), p.clone(), tau.clone(), 2.0).is_err());
        assert!(HalfLinearEquation::new(2.0, r.clone(), p.clone(), tau.clone(), -1.0).is_err());
        assert!(HalfLinearEquation::new(1.0, r, p.clone(), tau, E).is_err());
        let bad = DelayMap::custom("t", |t| t, |_| 1.0);
        assert!(matches!(
            HalfLinearEquation::new(2.0, CoefficientExpr::constant(1.0), p, bad, 1.0),
            Err(Error::UnsupportedDelay(_))
        ));
    }
}
