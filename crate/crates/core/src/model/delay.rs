//! Delay maps `τ` with `τ(t) ≤ t` and `τ' > 0`.

use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

use crate::error::{invalid, Result};
use crate::math::{exp, ln, ln1p};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied delay with its derivative.
#[derive(Clone)]
pub struct CustomDelay {
    label: String,
    tau: RealFn,
    tau_prime: RealFn,
}

impl fmt::Debug for CustomDelay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDelay").field("label", &self.label).finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum DelayMap {
    /// `τ(t) = t - σ`.
    Shift(f64),
    /// `τ(t) = λ t`.
    Proportional(f64),
    Custom(CustomDelay),
}

impl DelayMap {
    pub fn shift(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(Self::Shift(sigma))
        } else {
            Err(invalid(alloc::format!("shift must be nonnegative, got {sigma}")))
        }
    }

    pub fn proportional(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda <= 1.0 {
            Ok(Self::Proportional(lambda))
        } else {
            Err(invalid(alloc::format!("proportional factor must lie in (0, 1], got {lambda}")))
        }
    }

    pub fn custom(
        label: impl Into<String>,
        tau: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tau_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::Custom(CustomDelay { label: label.into(), tau: Arc::new(tau), tau_prime: Arc::new(tau_prime) })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Shift(s) => t - s,
            Self::Proportional(l) => l * t,
            Self::Custom(c) => (c.tau)(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            Self::Shift(_) => 1.0,
            Self::Proportional(l) => *l,
            Self::Custom(c) => (c.tau_prime)(t),
        }
    }

    /// `ln τ(e^x)` evaluated without forming `e^x` for the built-in kinds.
    pub fn ln_eval_at_log(&self, x: f64) -> f64 {
        match self {
            Self::Shift(s) => {
                if *s == 0.0 {
                    x
                } else {
                    x + ln1p(-s * exp(-x))
                }
            }
            Self::Proportional(l) => ln(*l) + x,
            Self::Custom(c) => ln((c.tau)(exp(x))),
        }
    }

    /// `ln τ'(e^x)`.
    pub fn ln_deriv_at_log(&self, x: f64) -> f64 {
        match self {
            Self::Custom(c) => ln((c.tau_prime)(exp(x))),
            _ => ln(self.deriv(0.0)),
        }
    }

    /// `τ(t) ≡ t`: the equation is an ODE.
    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Shift(s) if *s == 0.0) || matches!(self, Self::Proportional(l) if *l == 1.0)
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, Self::Custom(_))
    }

    /// `lim τ'(t)` when known in closed form.
    pub fn asymptotic_slope(&self) -> Option<f64> {
        match self {
            Self::Shift(_) => Some(1.0),
            Self::Proportional(l) => Some(*l),
            Self::Custom(_) => None,
        }
    }

    /// `limsup t/τ(t)` for the built-in kinds.
    pub fn ratio_bound(&self) -> Option<f64> {
        self.asymptotic_slope().map(|s| 1.0 / s)
    }

    /// Largest `h` with `τ(t + h) ≤ t`, when known in closed form.
    pub fn causal_step(&self, t: f64) -> Option<f64> {
        match self {
            _ if self.is_identity() => Some(f64::INFINITY),
            Self::Shift(s) => Some(*s),
            Self::Proportional(l) => Some(t * (1.0 - l) / l),
            Self::Custom(_) => None,
        }
    }
}
