//! The change of independent variable `s = φ(t)` with `φ = R_D` or `φ = Q`.
//!
//! The transformed equation has `r̂ = (r∘φ^{-1}) Φ(φ'∘φ^{-1})`, `p̂ = (p∘φ^{-1})/(φ'∘φ^{-1})`
//! and `τ̂ = φ∘τ∘φ^{-1}`; quasiderivatives are preserved: `x^{[1]}(s) = y^{[1]}(t)`.

use alloc::format;
use alloc::vec::Vec;

use crate::dde::Trajectory;
use crate::error::{precondition, Result};
use crate::math::{abs, exp, ln, powf};
use crate::model::HalfLinearEquation;
use crate::quad::{classify_improper, ChangeOfVariable, CovMode};

#[derive(Debug, Clone)]
pub struct TransformedEquation {
    eq: HalfLinearEquation,
    cov: ChangeOfVariable,
}

/// Deviation of `r̂` from its closed form on a sample of `s` values.
#[derive(Debug, Clone, PartialEq)]
pub struct RHatCheck {
    pub mode: CovMode,
    pub samples: Vec<(f64, f64)>,
    /// Absolute deviation from 1 (divergent) or relative deviation from `s^{2α-2}` (convergent).
    pub max_deviation: f64,
}

/// Agreement of `x^{[1]}(s)` with `y^{[1]}(t)` at trajectory nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiEquality {
    pub points: usize,
    pub max_rel: f64,
}

pub fn change_of_variables(eq: &HalfLinearEquation, cov: &ChangeOfVariable) -> Result<TransformedEquation> {
    if abs(cov.beta() - eq.beta()) > 1e-12 {
        return Err(precondition(format!("change of variable built for beta = {}, equation has {}", cov.beta(), eq.beta())));
    }
    let density = eq.r().powf(1.0 - eq.beta());
    let verdict = classify_improper(&density, cov.a())?;
    let mode = if verdict.is_convergent() { CovMode::Convergent } else { CovMode::Divergent };
    if mode != cov.mode() {
        return Err(precondition(format!("change of variable is {:?} but int r^(1-beta) is {:?}", cov.mode(), verdict.status)));
    }
    for t in [cov.a() * 2.0 + 1.0, cov.a() * 100.0 + 10.0] {
        let (d0, d1) = (density.ln_eval(t), cov.density().ln_eval(t));
        if abs(d0 - d1) > 1e-10 * (1.0 + abs(d0)) {
            return Err(precondition("change of variable was built from a different r"));
        }
    }
    Ok(TransformedEquation { eq: eq.clone(), cov: cov.clone() })
}

impl TransformedEquation {
    pub fn equation(&self) -> &HalfLinearEquation {
        &self.eq
    }

    pub fn cov(&self) -> &ChangeOfVariable {
        &self.cov
    }

    pub fn mode(&self) -> CovMode {
        self.cov.mode()
    }

    /// `ln r̂(s)`, computed in logs so that exponential coefficients stay in range.
    pub fn ln_r_hat(&self, s: f64) -> Result<f64> {
        let x = self.cov.inverse_log(s)?;
        Ok(self.eq.r().ln_eval_at_log(x) + (self.eq.alpha() - 1.0) * self.cov.ln_phi_prime_at_log(x)?)
    }

    pub fn r_hat(&self, s: f64) -> Result<f64> {
        Ok(exp(self.ln_r_hat(s)?))
    }

    pub fn ln_p_hat(&self, s: f64) -> Result<f64> {
        let x = self.cov.inverse_log(s)?;
        Ok(self.eq.p().ln_eval_at_log(x) - self.cov.ln_phi_prime_at_log(x)?)
    }

    pub fn p_hat(&self, s: f64) -> Result<f64> {
        Ok(exp(self.ln_p_hat(s)?))
    }

    /// `τ̂(s) = φ(τ(φ^{-1}(s)))`.
    pub fn tau_hat(&self, s: f64) -> Result<f64> {
        let x = self.cov.inverse_log(s)?;
        self.cov.forward_log(self.eq.tau().ln_eval_at_log(x))
    }

    /// `r̂` against 1 (divergent) or `s^{2α-2}` (convergent).
    pub fn check_r_hat(&self, ss: &[f64]) -> Result<RHatCheck> {
        let mut samples = Vec::with_capacity(ss.len());
        let mut worst = 0.0_f64;
        for &s in ss {
            let v = self.r_hat(s)?;
            let dev = match self.mode() {
                CovMode::Divergent => abs(v - 1.0),
                CovMode::Convergent => abs(v / powf(s, 2.0 * self.eq.alpha() - 2.0) - 1.0),
            };
            worst = worst.max(dev);
            samples.push((s, v));
        }
        Ok(RHatCheck { mode: self.mode(), samples, max_deviation: worst })
    }

    /// Compare `x^{[1]}(s) = r̂(s) Φ(x'(s))`, with `x'(s) = y'(t)/φ'(t)`, against `y^{[1]}(t)`
    /// at the trajectory nodes in `[t_lo, t_hi]`.
    pub fn quasi_equality(&self, traj: &Trajectory, t_lo: f64, t_hi: f64) -> Result<QuasiEquality> {
        let ex = self.eq.exponents();
        let (mut n, mut worst) = (0usize, 0.0_f64);
        for (i, &t) in traj.ts.iter().enumerate() {
            if t < t_lo || t > t_hi {
                continue;
            }
            let s = self.cov.forward(t)?;
            let x = self.cov.inverse_log(s)?;
            let th = exp(x).clamp(traj.t_start(), traj.t_end());
            let yp = traj.y_prime_at(th).ok_or_else(|| precondition(format!("trajectory undefined at {th}")))?;
            let ln_dphi = self.cov.ln_phi_prime_at_log(ln(th))?;
            let xp = yp * exp(-ln_dphi);
            let xq = self.r_hat(s)? * ex.phi(xp);
            let u = traj.quasis[i];
            worst = worst.max(abs(xq - u) / abs(u).max(f64::MIN_POSITIVE));
            n += 1;
        }
        if n == 0 {
            return Err(precondition(format!("no trajectory nodes in [{t_lo}, {t_hi}]")));
        }
        Ok(QuasiEquality { points: n, max_rel: worst })
    }
}
