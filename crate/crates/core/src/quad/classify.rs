//! Convergence of `∫_a^∞ f`: exact Bertrand rule for structured integrands,
//! windowed ratio heuristic otherwise.

use alloc::format;
use alloc::vec::Vec;

use super::gk::integrate;
use super::tail::{tail_integral, tail_integral_log};
use super::Integrand;
use crate::error::{domain, Error, Result};
use crate::math::{exp, ln, powf, sqrt};

const EXACT_TOL: f64 = 1e-12;
/// Ratio trends within this band of 1 are undecided at level one.
const BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictMethod {
    ExactIndexRule,
    NumericalHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImproperVerdict {
    pub status: Convergence,
    /// `∫_a^∞ f` when convergent, `+∞` otherwise.
    pub value: f64,
    pub method: VerdictMethod,
}

impl ImproperVerdict {
    pub fn is_convergent(&self) -> bool {
        self.status == Convergence::Convergent
    }
}

/// Convergence at infinity of `∫ t^power Π ln_k^{e_k} t dt`.
pub fn bertrand_rule(power: f64, log_powers: &[f64]) -> Convergence {
    if power < -1.0 - EXACT_TOL {
        return Convergence::Convergent;
    }
    if power > -1.0 + EXACT_TOL {
        return Convergence::Divergent;
    }
    // power = -1: the first log exponent that differs from -1 decides.
    for &e in log_powers {
        if e < -1.0 - EXACT_TOL {
            return Convergence::Convergent;
        }
        if e > -1.0 + EXACT_TOL {
            return Convergence::Divergent;
        }
    }
    Convergence::Divergent
}

/// Decide whether `∫_a^∞ f` converges.
pub fn classify_improper<I: Integrand + ?Sized>(f: &I, a: f64) -> Result<ImproperVerdict> {
    if let Some(s) = f.structure() {
        if s.is_regularly_varying() {
            if a < s.min_domain_start() * (1.0 - 1e-12) {
                return Err(domain(format!("a = {a} lies before the domain start {}", s.min_domain_start())));
            }
            let status = bertrand_rule(s.power, &s.log_powers);
            let value = match status {
                Convergence::Convergent => total_from(f, a)?,
                Convergence::Divergent => f64::INFINITY,
            };
            return Ok(ImproperVerdict { status, value, method: VerdictMethod::ExactIndexRule });
        }
    }
    heuristic(f, a)
}

fn total_from<I: Integrand + ?Sized>(f: &I, a: f64) -> Result<f64> {
    if a > 0.0 {
        Ok(tail_integral(f, a, 1e-10)?.value)
    } else {
        Ok(integrate(|t| f.value(t), a, 1.0, 1e-10)?.value + tail_integral(f, 1.0, 1e-10)?.value)
    }
}

fn verdict(status: Convergence, value: f64) -> ImproperVerdict {
    ImproperVerdict { status, value, method: VerdictMethod::NumericalHeuristic }
}

fn heuristic<I: Integrand + ?Sized>(f: &I, a: f64) -> Result<ImproperVerdict> {
    let start = if a > 0.0 { a } else { 1.0 };
    let head = if a < start { integrate(|t| f.value(t), a, start, 1e-10)?.value } else { 0.0 };
    let convergent_value = |partial: f64, last: f64, rho: f64| -> f64 {
        match tail_integral(f, start, 1e-8) {
            Ok(q) => head + q.value,
            Err(_) => head + partial + last * rho / (1.0 - rho),
        }
    };

    // Level one: windows doubling in t.
    let mut windows: Vec<f64> = Vec::new();
    let mut partial = 0.0;
    let mut lo = start;
    for _ in 0..48 {
        let hi = (2.0 * lo).max(lo + 1.0);
        let probe = f.value(hi);
        if probe == f64::INFINITY {
            return Ok(verdict(Convergence::Divergent, f64::INFINITY));
        }
        if probe.is_nan() {
            break;
        }
        let w = match integrate(|t| f.value(t), lo, hi, 1e-8) {
            Ok(q) => q.value,
            Err(Error::Domain(_)) => {
                if f.value(0.5 * (lo + hi)) == f64::INFINITY {
                    return Ok(verdict(Convergence::Divergent, f64::INFINITY));
                }
                break;
            }
            Err(e) => return Err(e),
        };
        if w == f64::INFINITY {
            return Ok(verdict(Convergence::Divergent, f64::INFINITY));
        }
        partial += w;
        windows.push(w);
        lo = hi;
        if w == 0.0 && windows.len() > 1 {
            return Ok(verdict(Convergence::Convergent, head + partial));
        }
    }
    let n = windows.len();
    if n >= 3 {
        let m = (n - 1).min(10);
        let rho = powf(windows[n - 1] / windows[n - 1 - m], 1.0 / m as f64);
        if rho < 1.0 - BAND {
            return Ok(verdict(Convergence::Convergent, convergent_value(partial, windows[n - 1], rho)));
        }
        if rho > 1.0 + BAND {
            return Ok(verdict(Convergence::Divergent, f64::INFINITY));
        }
    }

    // Level two: blocks doubling in x = ln t.
    let stable = f.log_stable();
    let g = |x: f64| exp(f.ln_measure_at_log(x));
    let mut blocks: Vec<f64> = Vec::new();
    let mut x = ln(start).max(1.0);
    let cap = if stable { 1e300 } else { 1e4 };
    while x < cap && blocks.len() < 60 {
        let hi = 2.0 * x;
        let probe = g(hi);
        if probe == f64::INFINITY {
            return Ok(verdict(Convergence::Divergent, f64::INFINITY));
        }
        if !probe.is_finite() || (!stable && probe == 0.0) {
            break;
        }
        match integrate(g, x, hi, 1e-8) {
            Ok(q) => blocks.push(q.value),
            Err(_) => break,
        }
        x = hi;
        if blocks.len() >= 12 {
            break;
        }
    }
    let n = blocks.len();
    if n >= 3 {
        let sigma = sqrt(blocks[n - 1] / blocks[n - 3]);
        if sigma < 1.0 - BAND {
            let last = blocks[n - 1];
            let value = match tail_integral_log(f, ln(start), 1e-8) {
                Ok(q) => head + q.value,
                Err(_) => head + partial + last * sigma / (1.0 - sigma),
            };
            return Ok(verdict(Convergence::Convergent, value));
        }
        if sigma > 1.0 + BAND {
            return Ok(verdict(Convergence::Divergent, f64::INFINITY));
        }
    }
    Err(Error::Inconclusive(format!(
        "window ratios stay within {BAND} of 1 from a = {a}; convergence undecided"
    )))
}
