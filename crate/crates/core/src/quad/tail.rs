//! Tail integrals `∫_t^∞ f` computed in `x = ln t` over growing blocks.

use alloc::format;
use alloc::vec::Vec;

use super::classify::{bertrand_rule, Convergence};
use super::gk::{integrate, Quadrature};
use super::Integrand;
use crate::error::{domain, precondition, Result};
use crate::math::{abs, exp, ln};

const MAX_BLOCKS: usize = 400;
/// Largest `x = ln t` evaluated for opaque log-integrands: beyond it the cancellation
/// between terms of size `x` leaves roundoff of order `eps x` in the exponent.
const X_CAP: f64 = 1e15;
/// Structured integrands combine powers exactly and can go much further.
const X_CAP_STRUCTURED: f64 = 1e300;

/// `∫_t^∞ f` with relative tolerance `tol`.
pub fn tail_integral<I: Integrand + ?Sized>(f: &I, t: f64, tol: f64) -> Result<Quadrature> {
    if !(t > 0.0) {
        return Err(precondition(format!("tail start must be positive, got {t}")));
    }
    tail_integral_log(f, ln(t), tol)
}

/// `∫_{e^{x0}}^∞ f`, for starting points beyond the range of `f64` in `t`.
pub fn tail_integral_log<I: Integrand + ?Sized>(f: &I, x0: f64, tol: f64) -> Result<Quadrature> {
    if let Some(s) = f.structure() {
        if s.is_regularly_varying() && bertrand_rule(s.power, &s.log_powers) == Convergence::Divergent {
            return Err(precondition("tail integral requested for a divergent integrand"));
        }
    }
    let tol = tol.max(1e-14);
    let stable = f.log_stable();
    let cap = if f.structure().is_some() { X_CAP_STRUCTURED } else { X_CAP };
    let g = |x: f64| exp(f.ln_measure_at_log(x));
    let next = |b: f64| {
        if b < 1.0 {
            b + 1.0
        } else if stable && b >= 8.0 {
            b * b
        } else {
            2.0 * b
        }
    };

    let mut blocks: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    let mut abs_err = 0.0;
    let mut lo = x0;
    let mut all_converged = true;
    let mut growing = 0;
    let mut capped = false;
    for _ in 0..MAX_BLOCKS {
        let hi = next(lo);
        if !hi.is_finite() || hi > cap {
            capped = true;
            break;
        }
        let probe = g(hi);
        if !probe.is_finite() {
            break;
        }
        // Later blocks are small against the running total, so their relative
        // tolerance can grow while the absolute error stays below 0.1 tol acc.
        let block_tol = match blocks.last() {
            Some(&prev) if prev > 0.0 && acc > 0.0 => (0.1 * tol * acc / prev).clamp(0.1 * tol, 1e-3),
            _ => 0.1 * tol,
        };
        let q = match integrate(g, lo, hi, block_tol) {
            Ok(q) => q,
            Err(_) if !stable => break,
            Err(e) => return Err(e),
        };
        // A closure that jumps to zero from a sizeable value has left its range of
        // validity (intermediate overflow): drop the block and extrapolate instead.
        if !stable && probe == 0.0 && blocks.len() >= 2 && jumps_to_zero(&g, lo, hi) {
            break;
        }
        all_converged &= q.converged;
        acc += q.value;
        abs_err += q.abs_error;
        blocks.push(q.value);
        lo = hi;
        let n = blocks.len();
        if q.value == 0.0 && n > 1 {
            return Ok(Quadrature { value: acc, abs_error: abs_err, converged: all_converged });
        }
        if n >= 2 {
            let rho = blocks[n - 1] / blocks[n - 2];
            if rho < 1.0 {
                growing = 0;
                let rem = blocks[n - 1] * rho / (1.0 - rho);
                if rem <= 0.5 * tol * acc {
                    return Ok(Quadrature { value: acc + rem, abs_error: abs_err + rem, converged: all_converged });
                }
            } else {
                growing += 1;
                if growing >= 3 {
                    return Err(precondition("tail integral appears divergent"));
                }
            }
        }
    }
    // Evaluation range exhausted: close the tail with a geometric remainder.
    let n = blocks.len();
    if n == 0 {
        return Err(domain(format!("integrand not evaluable beyond x = {x0}")));
    }
    if n == 1 {
        return Ok(Quadrature { value: acc, abs_error: abs_err + acc, converged: false });
    }
    if capped && stable {
        // Blocks stopped at the cap: close with a power law in x when the slope is settled
        // there and clear of -1, where slowly varying factors would dominate.
        let lm = |x: f64| f.ln_measure_at_log(x);
        let k = (lm(lo) - lm(0.25 * lo)) / ln(4.0);
        let k_prev = (lm(0.25 * lo) - lm(0.0625 * lo)) / ln(4.0);
        if k < -1.1 && abs(k - k_prev) < 0.01 * (-1.0 - k) {
            let rem = exp(f.ln_measure_at_log(lo)) * lo / (-k - 1.0);
            if rem.is_finite() {
                return Ok(Quadrature { value: acc + rem, abs_error: abs_err + 0.1 * rem, converged: all_converged });
            }
        }
    }
    let rho = blocks[n - 1] / blocks[n - 2];
    if !(rho < 1.0) {
        return Err(precondition("tail integral appears divergent"));
    }
    let rem = blocks[n - 1] * rho / (1.0 - rho);
    let stable_ratio = n >= 3 && {
        let prev = blocks[n - 2] / blocks[n - 3];
        abs(prev - rho) <= 0.05 * rho
    };
    Ok(Quadrature {
        value: acc + rem,
        abs_error: abs_err + 0.1 * rem,
        converged: all_converged && (rem <= tol * acc || stable_ratio),
    })
}

/// Whether `g` vanishes abruptly somewhere in `[lo, hi]`, given `g(hi) = 0`.
fn jumps_to_zero(g: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> bool {
    let (mut a, mut b) = (lo, hi);
    if g(a) == 0.0 {
        return true;
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if g(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    g(a) > 1e-200
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefficientExpr;
    use crate::quad::FnIntegrand;
    use core::f64::consts::E;

    #[test]
    fn power_tail() {
        let f = CoefficientExpr::new(1.0, -2.0);
        assert!((tail_integral(&f, 10.0, 1e-10).unwrap().value - 0.1).abs() < 1e-8);
    }

    #[test]
    fn bertrand_tail() {
        let f = CoefficientExpr::new(1.0, -1.0).with_logs([-2.0]);
        assert!((tail_integral(&f, E * E, 1e-10).unwrap().value - 0.5).abs() < 1e-8);
        let f = CoefficientExpr::new(1.0, -1.0).with_logs([-1.0, -2.0]);
        let t = 1e3;
        assert!((tail_integral(&f, t, 1e-10).unwrap().value - 1.0 / ln(ln(t))).abs() < 1e-8);
    }

    #[test]
    fn exponential_tail_matches_closed_form() {
        // ∫_t^∞ (4s²-2) e^{1-2s} ds = e^{1-2t} (2t² + 2t) by parts.
        let f = FnIntegrand(|s: f64| (4.0 * s * s - 2.0) * exp(1.0 - 2.0 * s));
        for t in [1.0, 2.5, 6.0] {
            let exact = exp(1.0 - 2.0 * t) * (2.0 * t * t + 2.0 * t);
            let q = tail_integral(&f, t, 1e-12).unwrap();
            assert!((q.value - exact).abs() <= 1e-8 * exact, "t = {t}: {q:?} vs {exact}");
        }
    }

    #[test]
    fn divergent_is_rejected() {
        let f = CoefficientExpr::new(1.0, -1.0).with_logs([-1.0]);
        assert!(tail_integral(&f, 10.0, 1e-8).is_err());
        let g = FnIntegrand(|s: f64| 1.0 / s.sqrt());
        assert!(tail_integral(&g, 10.0, 1e-8).is_err());
    }

    #[test]
    fn closure_with_limited_range_is_extrapolated() {
        // 1/(t ln² t) written so that it overflows to NaN past t ~ 1e154.
        let f = FnIntegrand(|t: f64| {
            let big = t * t;
            big / (t * t * t * ln(t) * ln(t))
        });
        let q = tail_integral(&f, 1e4, 1e-8).unwrap();
        assert!((q.value - 1.0 / ln(1e4)).abs() < 2e-4 / ln(1e4), "{q:?}");
    }
}
