//! Quadrature, improper-integral classification and the `R_D`/`R_C` change of variable.

mod classify;
mod cov;
mod gk;
mod tail;

pub use classify::{bertrand_rule, classify_improper, Convergence, ImproperVerdict, VerdictMethod};
pub use cov::{build_change_of_variable, ChangeOfVariable, CovMode};
pub use gk::{integrate, Quadrature};
pub use tail::{tail_integral, tail_integral_log};

use crate::math::{exp, ln};
use crate::model::CoefficientExpr;

/// A positive integrand on `(0, ∞)`.
pub trait Integrand {
    fn value(&self, t: f64) -> f64;

    /// `ln f(e^x)`.
    fn ln_value_at_log(&self, x: f64) -> f64 {
        ln(self.value(exp(x)))
    }

    /// `ln(t f(t))` at `t = e^x`: the integrand of `∫ f dt` in the variable `x`.
    fn ln_measure_at_log(&self, x: f64) -> f64 {
        self.ln_value_at_log(x) + x
    }

    /// The structured form, when the integrand is a plain coefficient expression.
    fn structure(&self) -> Option<&CoefficientExpr> {
        None
    }

    /// Whether `ln_value_at_log` is reliable for arbitrarily large `x`.
    fn log_stable(&self) -> bool {
        false
    }
}

impl Integrand for CoefficientExpr {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn ln_value_at_log(&self, x: f64) -> f64 {
        CoefficientExpr::ln_eval_at_log(self, x)
    }

    fn ln_measure_at_log(&self, x: f64) -> f64 {
        self.ln_eval_at_log_shifted(x, 1.0)
    }

    fn structure(&self) -> Option<&CoefficientExpr> {
        Some(self)
    }

    fn log_stable(&self) -> bool {
        self.custom.is_none()
    }
}

impl<T: Integrand + ?Sized> Integrand for &T {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }

    fn ln_value_at_log(&self, x: f64) -> f64 {
        (**self).ln_value_at_log(x)
    }

    fn ln_measure_at_log(&self, x: f64) -> f64 {
        (**self).ln_measure_at_log(x)
    }

    fn structure(&self) -> Option<&CoefficientExpr> {
        (**self).structure()
    }

    fn log_stable(&self) -> bool {
        (**self).log_stable()
    }
}

/// Plain closure integrand.
pub struct FnIntegrand<F>(pub F);

impl<F: Fn(f64) -> f64> Integrand for FnIntegrand<F> {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// Integrand given through `x ↦ ln f(e^x)`, valid for every `x`.
pub struct LogIntegrand<F>(pub F);

impl<F: Fn(f64) -> f64> Integrand for LogIntegrand<F> {
    fn value(&self, t: f64) -> f64 {
        exp((self.0)(ln(t)))
    }

    fn ln_value_at_log(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    fn log_stable(&self) -> bool {
        true
    }
}
