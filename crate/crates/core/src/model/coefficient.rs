//! Structured positive coefficients `c · t^θ · Π ln_k^{e_k} t · e^{γt} t^ω · f(t)`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};
use crate::math::{exp, ln, powf};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exponential factor `e^{γt} t^ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpRate {
    pub gamma: f64,
    pub omega: f64,
}

/// Opaque positive factor with a user-supplied derivative.
#[derive(Clone)]
pub struct CustomFactor {
    label: String,
    value: RealFn,
    deriv: RealFn,
}

impl CustomFactor {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), value: Arc::new(value), deriv: Arc::new(deriv) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.deriv)(t)
    }

    fn mul(&self, other: &CustomFactor) -> CustomFactor {
        let (f, df, g, dg) =
            (self.value.clone(), self.deriv.clone(), other.value.clone(), other.deriv.clone());
        let (f2, g2) = (f.clone(), g.clone());
        CustomFactor {
            label: alloc::format!("({})*({})", self.label, other.label),
            value: Arc::new(move |t| f(t) * g(t)),
            deriv: Arc::new(move |t| df(t) * g2(t) + f2(t) * dg(t)),
        }
    }

    fn powf(&self, c: f64) -> CustomFactor {
        let (f, df) = (self.value.clone(), self.deriv.clone());
        let f2 = f.clone();
        CustomFactor {
            label: alloc::format!("({})^{c}", self.label),
            value: Arc::new(move |t| powf(f(t), c)),
            deriv: Arc::new(move |t| c * powf(f2(t), c - 1.0) * df(t)),
        }
    }
}

impl fmt::Debug for CustomFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFactor").field("label", &self.label).finish_non_exhaustive()
    }
}

/// A positive coefficient of the form `scale · t^power · Π_k (ln_k t)^{e_k} · e^{γt}t^ω · custom(t)`.
///
/// Without the exponential and custom parts the expression is regularly varying
/// with index `power`.
#[derive(Clone, Debug)]
pub struct CoefficientExpr {
    pub scale: f64,
    pub power: f64,
    /// `log_powers[k]` is the exponent of the (k+1)-times iterated logarithm.
    pub log_powers: Vec<f64>,
    pub exp_rate: Option<ExpRate>,
    pub custom: Option<CustomFactor>,
}

impl CoefficientExpr {
    pub fn new(scale: f64, power: f64) -> Self {
        Self { scale, power, log_powers: Vec::new(), exp_rate: None, custom: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, 0.0)
    }

    pub fn with_logs(mut self, log_powers: impl Into<Vec<f64>>) -> Self {
        self.log_powers = log_powers.into();
        self
    }

    pub fn with_exp(mut self, gamma: f64, omega: f64) -> Self {
        self.exp_rate = Some(ExpRate { gamma, omega });
        self
    }

    pub fn with_custom(mut self, factor: CustomFactor) -> Self {
        self.custom = Some(factor);
        self
    }

    /// Purely custom coefficient `f(t)`.
    pub fn custom(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::constant(1.0).with_custom(CustomFactor::new(label, value, deriv))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid(alloc::format!("scale must be positive, got {}", self.scale)));
        }
        let finite = self.power.is_finite()
            && self.log_powers.iter().all(|e| e.is_finite())
            && self.exp_rate.map_or(true, |e| e.gamma.is_finite() && e.omega.is_finite());
        if !finite {
            return Err(invalid("non-finite exponent in coefficient"));
        }
        Ok(())
    }

    /// True when there is neither an exponential nor a custom factor.
    pub fn is_regularly_varying(&self) -> bool {
        self.exp_rate.is_none() && self.custom.is_none()
    }

    /// True when evaluation goes only through closed-form pieces.
    pub fn is_closed_form(&self) -> bool {
        self.custom.is_none()
    }

    /// Index of regular variation when it is structurally known.
    pub fn rv_index(&self) -> Option<f64> {
        self.is_regularly_varying().then_some(self.power)
    }

    /// Number of iterated logarithms that actually appear.
    pub fn log_depth(&self) -> usize {
        self.log_powers.iter().rposition(|&e| e != 0.0).map_or(0, |k| k + 1)
    }

    /// Smallest admissible left endpoint: the deepest iterated log must be at least 1.
    pub fn min_domain_start(&self) -> f64 {
        let mut a = 0.0;
        if self.log_depth() > 0 {
            a = 1.0;
            for _ in 0..self.log_depth() {
                a = exp(a);
            }
        }
        a
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.scale;
        if self.power != 0.0 {
            v *= powf(t, self.power);
        }
        let depth = self.log_depth();
        let mut l = t;
        for &e in &self.log_powers[..depth] {
            l = ln(l);
            if e != 0.0 {
                v *= powf(l, e);
            }
        }
        if let Some(ExpRate { gamma, omega }) = self.exp_rate {
            v *= exp(gamma * t + if omega != 0.0 { omega * ln(t) } else { 0.0 });
        }
        if let Some(c) = &self.custom {
            v *= c.value(t);
        }
        v
    }

    /// `ln f(e^x)`, usable far beyond the range where `eval` would overflow.
    pub fn ln_eval_at_log(&self, x: f64) -> f64 {
        self.ln_eval_at_log_shifted(x, 0.0)
    }

    /// `ln(t^k f(t))` at `t = e^x`, with the powers combined before multiplying by `x`.
    pub fn ln_eval_at_log_shifted(&self, x: f64, k: f64) -> f64 {
        let mut acc = ln(self.scale);
        let power = self.power + k;
        if power != 0.0 {
            acc += power * x;
        }
        let depth = self.log_depth();
        let mut l = x;
        for &e in &self.log_powers[..depth] {
            if e != 0.0 {
                acc += e * ln(l);
            }
            l = ln(l);
        }
        if let Some(ExpRate { gamma, omega }) = self.exp_rate {
            acc += gamma * exp(x) + omega * x;
        }
        if let Some(c) = &self.custom {
            acc += ln(c.value(exp(x)));
        }
        acc
    }

    pub fn ln_eval(&self, t: f64) -> f64 {
        if self.custom.is_none() {
            self.ln_eval_at_log(ln(t))
        } else {
            ln(self.eval(t))
        }
    }

    /// `t f'(t)/f(t)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        let mut w = self.power;
        let depth = self.log_depth();
        let mut l = t;
        let mut prod = 1.0;
        for &e in &self.log_powers[..depth] {
            l = ln(l);
            prod *= l;
            if e != 0.0 {
                w += e / prod;
            }
        }
        if let Some(ExpRate { gamma, omega }) = self.exp_rate {
            w += gamma * t + omega;
        }
        if let Some(c) = &self.custom {
            w += t * c.deriv(t) / c.value(t);
        }
        w
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if self.log_depth() == 0 && self.exp_rate.is_none() && self.custom.is_none() {
            if self.power == 0.0 {
                return 0.0;
            }
            return self.scale * self.power * powf(t, self.power - 1.0);
        }
        self.eval(t) * self.log_derivative(t) / t
    }

    /// `f(t)/t^power`.
    pub fn slowly_varying_part(&self, t: f64) -> f64 {
        self.eval(t) / powf(t, self.power)
    }

    /// The expression with its power part removed, `L = f/t^power`.
    pub fn slowly_varying_expr(&self) -> Self {
        let mut out = self.clone();
        out.power = 0.0;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.log_powers.len().max(other.log_powers.len());
        let log_powers = (0..n)
            .map(|k| {
                self.log_powers.get(k).copied().unwrap_or(0.0)
                    + other.log_powers.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        let exp_rate = match (self.exp_rate, other.exp_rate) {
            (None, None) => None,
            (a, b) => {
                let a = a.unwrap_or(ExpRate { gamma: 0.0, omega: 0.0 });
                let b = b.unwrap_or(ExpRate { gamma: 0.0, omega: 0.0 });
                Some(ExpRate { gamma: a.gamma + b.gamma, omega: a.omega + b.omega })
            }
        };
        let custom = match (&self.custom, &other.custom) {
            (None, None) => None,
            (Some(c), None) | (None, Some(c)) => Some(c.clone()),
            (Some(a), Some(b)) => Some(a.mul(b)),
        };
        Self { scale: self.scale * other.scale, power: self.power + other.power, log_powers, exp_rate, custom }.normalized()
    }

    /// Fold an exponential factor with zero rate into the power.
    fn normalized(mut self) -> Self {
        if let Some(ExpRate { gamma, omega }) = self.exp_rate {
            if gamma == 0.0 {
                self.power += omega;
                self.exp_rate = None;
            }
        }
        self
    }

    pub fn powf(&self, c: f64) -> Self {
        Self {
            scale: powf(self.scale, c),
            power: self.power * c,
            log_powers: self.log_powers.iter().map(|e| e * c).collect(),
            exp_rate: self.exp_rate.map(|e| ExpRate { gamma: e.gamma * c, omega: e.omega * c }),
            custom: self.custom.as_ref().map(|f| f.powf(c)),
        }
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    /// Multiply by `t^k`.
    pub fn times_power(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.power += k;
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale *= c;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_structured() {
        let r = CoefficientExpr::new(1.0, 2.0).with_logs([2.0]);
        let e = core::f64::consts::E;
        assert!((r.eval(e) - e * e).abs() < 1e-12);
        assert!((r.ln_eval(10.0) - ln(r.eval(10.0))).abs() < 1e-12);
        assert_eq!(r.rv_index(), Some(2.0));
        assert!((r.min_domain_start() - e).abs() < 1e-15);
    }

    #[test]
    fn iterated_log_domain() {
        let p = CoefficientExpr::new(1.0, -1.0).with_logs([-2.0, -2.0]);
        assert!((p.min_domain_start() - exp(core::f64::consts::E)).abs() < 1e-12);
        assert_eq!(CoefficientExpr::new(1.0, 3.0).with_logs([0.0, 0.0]).log_depth(), 0);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let cases = [
            CoefficientExpr::new(2.0, 1.5).with_logs([-1.0, 2.0]),
            CoefficientExpr::new(1.0, -1.0).with_exp(-0.1, -1.0),
            CoefficientExpr::new(3.0, 0.5).with_custom(CustomFactor::new("1+1/t", |t| 1.0 + 1.0 / t, |t| -1.0 / (t * t))),
        ];
        for f in &cases {
            for &t in &[20.0, 55.0, 130.0] {
                let h = 1e-5 * t;
                let fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
                assert!((fd - f.deriv(t)).abs() <= 1e-6 * fd.abs(), "{f:?} at {t}");
            }
        }
    }

    #[test]
    fn algebra() {
        let a = CoefficientExpr::new(2.0, 1.0).with_logs([1.0]);
        let b = CoefficientExpr::new(3.0, -2.0).with_logs([0.0, 1.0]);
        let t = 50.0;
        assert!((a.mul(&b).eval(t) - a.eval(t) * b.eval(t)).abs() < 1e-12 * a.eval(t) * b.eval(t));
        assert!((a.powf(-0.5).eval(t) - a.eval(t).powf(-0.5)).abs() < 1e-14);
        let c = CoefficientExpr::custom("t", |t| t, |_| 1.0);
        let d = c.mul(&c).powf(0.5);
        assert!((d.eval(7.0) - 7.0).abs() < 1e-12);
        assert!((d.deriv(7.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_space_evaluation_survives_overflow() {
        let f = CoefficientExpr::new(1.0, 3.0).with_logs([-2.0]);
        let x = 1e4;
        assert!(f.eval(exp(x)).is_infinite() || f.eval(exp(x)).is_nan());
        assert!((f.ln_eval_at_log(x) - (3.0 * x - 2.0 * ln(x))).abs() < 1e-9);
    }
}
