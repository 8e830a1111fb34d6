//! Solution samples with piecewise cubic Hermite interpolation.

use alloc::vec::Vec;

use super::HistorySpec;
use crate::math::abs;
use crate::model::HalfLinearEquation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    Completed,
    /// `y` reached zero at the given time.
    HitZero(f64),
    /// A state component became non-finite at the given time.
    Overflow(f64),
    /// The adaptive step collapsed at the given time.
    StepUnderflow(f64),
}

/// Accepted nodes of a solve plus everything needed to evaluate `y` before `a`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<f64>,
    pub y_primes: Vec<f64>,
    /// `u = r Φ(y')`.
    pub quasis: Vec<f64>,
    /// `u' = p Φ(y∘τ)`.
    pub quasi_primes: Vec<f64>,
    pub status: SolveStatus,
    pub(crate) eq: HalfLinearEquation,
    pub(crate) history: HistorySpec,
}

#[inline]
pub(crate) fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * m1;
    let d = (6.0 * s2 - 6.0 * s) * y0 / h + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (6.0 * s - 6.0 * s2) * y1 / h + (3.0 * s2 - 2.0 * s) * m1;
    (v, d)
}

/// Segment index `i` with `ts[i] ≤ t ≤ ts[i+1]`, or `None` outside the grid.
pub(crate) fn locate(ts: &[f64], t: f64) -> Option<usize> {
    let n = ts.len();
    if n == 0 || t < ts[0] || t > ts[n - 1] {
        return None;
    }
    if n == 1 {
        return Some(0);
    }
    let j = ts.partition_point(|&s| s <= t);
    Some(j.saturating_sub(1).min(n - 2))
}

impl Trajectory {
    pub fn equation(&self) -> &HalfLinearEquation {
        &self.eq
    }

    pub fn history(&self) -> &HistorySpec {
        &self.history
    }

    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        self.ts[self.ts.len() - 1]
    }

    fn interp(&self, vals: &[f64], ders: &[f64], t: f64) -> Option<(f64, f64)> {
        let i = locate(&self.ts, t)?;
        if self.ts.len() == 1 {
            return Some((vals[0], ders[0]));
        }
        Some(hermite(self.ts[i], self.ts[i + 1], vals[i], vals[i + 1], ders[i], ders[i + 1], t))
    }

    /// `y(t)` for `t` in the integration range.
    pub fn y_at(&self, t: f64) -> Option<f64> {
        self.interp(&self.ys, &self.y_primes, t).map(|p| p.0)
    }

    /// Derivative of the `y` interpolant.
    pub fn y_prime_at(&self, t: f64) -> Option<f64> {
        self.interp(&self.ys, &self.y_primes, t).map(|p| p.1)
    }

    /// `y^{[1]}(t)` from its own Hermite interpolant.
    pub fn quasi_at(&self, t: f64) -> Option<f64> {
        self.interp(&self.quasis, &self.quasi_primes, t).map(|p| p.0)
    }

    pub fn quasi_prime_at(&self, t: f64) -> Option<f64> {
        self.interp(&self.quasis, &self.quasi_primes, t).map(|p| p.1)
    }

    /// `y(t)`, reading the history for `t ≤ a`.
    pub fn y_ext(&self, t: f64) -> Option<f64> {
        if t <= self.ts[0] {
            Some(self.history.value(t))
        } else {
            self.y_at(t)
        }
    }

    /// `y'(t)`, reading the history for `t ≤ a`.
    pub fn y_prime_ext(&self, t: f64) -> Option<f64> {
        if t <= self.ts[0] {
            Some(self.history.deriv(t))
        } else {
            self.y_prime_at(t)
        }
    }

    /// `y^{[1]}(t)`, using `r Φ(φ')` for `t ≤ a`.
    pub fn quasi_ext(&self, t: f64) -> Option<f64> {
        if t < self.ts[0] {
            let v = self.eq.r().eval(t) * self.eq.exponents().phi(self.history.deriv(t));
            v.is_finite().then_some(v)
        } else {
            self.quasi_at(t)
        }
    }

    /// Largest relative deviation of `quasis[i]` from `r(t_i) Φ(y'_i)`.
    pub fn max_quasi_inconsistency(&self) -> f64 {
        let ex = self.eq.exponents();
        self.ts
            .iter()
            .zip(&self.y_primes)
            .zip(&self.quasis)
            .map(|((&t, &yp), &u)| {
                let v = self.eq.r().eval(t) * ex.phi(yp);
                abs(v - u) / abs(u).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}
