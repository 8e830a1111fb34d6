//! Residuals of candidate solutions and manufactured coefficients.

use alloc::format;

use crate::error::{invalid, precondition, Result};
use crate::math::{abs, powf};
use crate::model::{CoefficientExpr, DelayMap, HalfLinearEquation};

fn quasi(eq: &HalfLinearEquation, t: f64, yp: f64) -> f64 {
    eq.r().eval(t) * eq.exponents().phi(yp)
}

fn rhs(eq: &HalfLinearEquation, y: &impl Fn(f64) -> f64, t: f64) -> f64 {
    eq.p().eval(t) * eq.exponents().phi(y(eq.tau().eval(t)))
}

/// Max over interior grid points of `|Δ[rΦ(y')]/Δt - p Φ(y∘τ)|`.
///
/// Uniformly spaced neighbourhoods use the five-point central stencil; other
/// points fall back to the three-point one.
pub fn residual(
    eq: &HalfLinearEquation,
    y: impl Fn(f64) -> f64,
    y_prime: impl Fn(f64) -> f64,
    grid: &[f64],
) -> Result<f64> {
    let n = grid.len();
    if n < 5 {
        return Err(precondition(format!("residual needs at least 5 grid points, got {n}")));
    }
    let q: alloc::vec::Vec<f64> = grid.iter().map(|&t| quasi(eq, t, y_prime(t))).collect();
    let uniform = |i: usize| {
        let h = grid[i + 1] - grid[i];
        (i - 2..i + 2).all(|j| abs(grid[j + 1] - grid[j] - h) <= 1e-9 * h)
    };
    let all_uniform = (2..n - 2).all(uniform);
    let mut worst = 0.0_f64;
    let range = if all_uniform { 2..n - 2 } else { 1..n - 1 };
    for i in range {
        let t = grid[i];
        let dq = if all_uniform {
            let h = grid[i + 1] - grid[i];
            (q[i - 2] - 8.0 * q[i - 1] + 8.0 * q[i + 1] - q[i + 2]) / (12.0 * h)
        } else {
            (q[i + 1] - q[i - 1]) / (grid[i + 1] - grid[i - 1])
        };
        worst = worst.max(abs(dq - rhs(eq, &y, t)));
    }
    Ok(worst)
}

/// Residual summary from local stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub max_abs: f64,
    /// Residual relative to `|p Φ(y∘τ)|`.
    pub max_rel: f64,
}

/// Residual at isolated points, each with its own five-point stencil of step `rel_step · t`.
pub fn residual_stencil(
    eq: &HalfLinearEquation,
    y: impl Fn(f64) -> f64,
    y_prime: impl Fn(f64) -> f64,
    points: &[f64],
    rel_step: f64,
) -> Result<ResidualStats> {
    let mut stats = ResidualStats { max_abs: 0.0, max_rel: 0.0 };
    for &t in points {
        let h = rel_step * t;
        let qv = |s: f64| quasi(eq, s, y_prime(s));
        let dq = (qv(t - 2.0 * h) - 8.0 * qv(t - h) + 8.0 * qv(t + h) - qv(t + 2.0 * h)) / (12.0 * h);
        let r = rhs(eq, &y, t);
        let d = abs(dq - r);
        if !d.is_finite() {
            return Err(invalid(format!("residual not finite at t = {t}")));
        }
        stats.max_abs = stats.max_abs.max(d);
        stats.max_rel = stats.max_rel.max(d / abs(r));
    }
    Ok(stats)
}

/// The coefficient `p` for which `y = t^ρ` solves the equation with `r = c t^γ`, `τ = λ t`.
pub fn manufactured_p(r: &CoefficientExpr, tau: &DelayMap, rho: f64, alpha: f64) -> Result<CoefficientExpr> {
    crate::model::conjugate(alpha)?;
    if r.log_depth() > 0 || !r.is_regularly_varying() {
        return Err(invalid("manufactured_p needs r = c t^gamma"));
    }
    let DelayMap::Proportional(lambda) = *tau else {
        return Err(invalid("manufactured_p needs a proportional delay"));
    };
    if !(rho > 0.0) {
        return Err(invalid(format!("target exponent must be positive, got {rho}")));
    }
    let gamma = r.power;
    let k = gamma + (rho - 1.0) * (alpha - 1.0);
    if !(k > 0.0) {
        return Err(invalid(format!("gamma + (rho-1)(alpha-1) = {k} is not positive; p would not be positive")));
    }
    let scale = r.scale * powf(rho, alpha - 1.0) * k * powf(lambda, -rho * (alpha - 1.0));
    Ok(CoefficientExpr::new(scale, gamma - alpha))
}
