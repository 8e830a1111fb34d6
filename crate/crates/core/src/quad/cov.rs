//! The change of variable `s = R_D(t)` (divergent `∫ r^{1-β}`) or `s = Q(t) = 1/R_C(t)` (convergent).
//!
//! The cumulative table lives in `ξ = ln t`, so huge arguments such as `R_D = ln t`
//! at `s = 10^6` stay representable.

use alloc::format;
use alloc::vec::Vec;

use super::classify::{classify_improper, Convergence, ImproperVerdict};
use super::gk::integrate;
use super::Integrand;
use crate::error::{domain, invalid, Result};
use crate::math::{abs, exp, ln};
use crate::model::CoefficientExpr;

const NODES_PER_DECADE: f64 = 40.0;
const TABLE_DECADES: f64 = 8.0;
const QUAD_TOL: f64 = 1e-13;
const FAR_RATIO: f64 = 2.0;
/// Log-density drop across a piece beyond which the piece is integrated from its heavy end.
const STEEP: f64 = 30.0;
const FAR_END: f64 = 1e300;

/// Quadrature tolerance for `exp(ℓ(v) - r)` near `v ≈ x`: the difference carries
/// roundoff of order `eps (|ℓ| + |x|)`, which no tolerance below that can beat.
fn noisy_tol(x: f64, r: f64) -> f64 {
    QUAD_TOL.max(1e-13 * (abs(x) + abs(r)))
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ln(exp(a - m) + exp(b - m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovMode {
    /// `∫_a^∞ r^{1-β} = ∞`, `φ = R_D`.
    Divergent,
    /// `∫_a^∞ r^{1-β} < ∞`, `φ = Q = 1/R_C`.
    Convergent,
}

#[derive(Debug, Clone)]
pub struct ChangeOfVariable {
    mode: CovMode,
    beta: f64,
    a: f64,
    density: CoefficientExpr,
    verdict: ImproperVerdict,
    /// Start of the log table; `[a, t0]` is handled in `t` when `a < 1`.
    t0: f64,
    /// `∫_a^{t0}` of the density.
    prefix: f64,
    dx: f64,
    xs: Vec<f64>,
    /// Divergent: `∫_a^{e^{x_i}}`; convergent: `∫_{e^{x_i}}^∞`.
    cum: Vec<f64>,
    /// Far table: nodes geometric in `ξ` from the end of `xs`, with `ln R` at each node.
    far_xs: Vec<f64>,
    far_ln: Vec<f64>,
}

/// Build the change of variable associated with `r` and the conjugate exponent `beta`.
pub fn build_change_of_variable(r: &CoefficientExpr, beta: f64, a: f64) -> Result<ChangeOfVariable> {
    if !(beta > 1.0) {
        return Err(invalid(format!("conjugate exponent must exceed 1, got {beta}")));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(invalid(format!("left endpoint must be nonnegative, got {a}")));
    }
    let density = r.powf(1.0 - beta);
    let verdict = classify_improper(&density, a)?;
    let mode = match verdict.status {
        Convergence::Divergent => CovMode::Divergent,
        Convergence::Convergent => CovMode::Convergent,
    };
    let t0 = a.max(1.0);
    let prefix = if a < t0 { integrate(|t| density.eval(t), a, t0, QUAD_TOL)?.value } else { 0.0 };
    let dx = core::f64::consts::LN_10 / NODES_PER_DECADE;
    let x0 = ln(t0);
    let n = (TABLE_DECADES * NODES_PER_DECADE) as usize + 1;
    let mut cov = ChangeOfVariable { mode, beta, a, density, verdict, t0, prefix, dx, xs: Vec::new(), cum: Vec::new(), far_xs: Vec::new(), far_ln: Vec::new() };
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let x = x0 + i as f64 * dx;
        if !cov.g(x).is_finite() {
            break;
        }
        xs.push(x);
    }
    if xs.len() < 2 {
        return Err(domain("density r^{1-beta} overflows immediately past the left endpoint"));
    }
    let pieces: Vec<f64> = xs
        .windows(2)
        .map(|w| cov.piece(w[0], w[1]))
        .collect::<Result<_>>()?;
    let mut cum = Vec::with_capacity(xs.len());
    match mode {
        CovMode::Divergent => {
            let mut acc = prefix;
            cum.push(acc);
            for p in &pieces {
                acc += p;
                cum.push(acc);
            }
            if !acc.is_finite() {
                return Err(domain("cumulative density overflows"));
            }
        }
        CovMode::Convergent => {
            cov.build_far(*xs.last().unwrap(), None)?;
            let mut acc = exp(cov.far_ln[0]);
            cum.push(acc);
            for p in pieces.iter().rev() {
                acc += p;
                cum.push(acc);
            }
            cum.reverse();
        }
    }
    if mode == CovMode::Divergent {
        cov.build_far(*xs.last().unwrap(), Some(ln(*cum.last().unwrap())))?;
    }
    cov.xs = xs;
    cov.cum = cum;
    Ok(cov)
}

impl ChangeOfVariable {
    pub fn mode(&self) -> CovMode {
        self.mode
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn verdict(&self) -> ImproperVerdict {
        self.verdict
    }

    /// The density `r^{1-β}`.
    pub fn density(&self) -> &CoefficientExpr {
        &self.density
    }

    /// Density in `ξ`: `d/dξ ∫^{e^ξ} r^{1-β} = r^{1-β}(e^ξ) e^ξ`.
    fn g(&self, x: f64) -> f64 {
        exp(self.density.ln_measure_at_log(x))
    }

    fn piece(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo == hi {
            return Ok(0.0);
        }
        let (l, h, s) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
        Ok(s * integrate(|x| self.g(x), l, h, QUAD_TOL)?.value)
    }

    fn node(&self, x: f64) -> usize {
        let i = crate::math::floor((x - self.xs[0]) / self.dx);
        (i.max(0.0) as usize).min(self.xs.len() - 1)
    }

    /// `R_D(e^x)` or `R_C(e^x)`.
    pub fn cumulative_log(&self, x: f64) -> Result<f64> {
        let last = self.xs.len() - 1;
        if x < self.xs[0] {
            return self.cumulative(exp(x));
        }
        let i = self.node(x);
        match self.mode {
            CovMode::Divergent => Ok(self.cum[i] + self.piece(self.xs[i], x)?),
            CovMode::Convergent => {
                if i >= last {
                    Ok(exp(self.ln_cumulative_log(x)?))
                } else {
                    Ok(self.cum[i + 1] + self.piece(x, self.xs[i + 1])?)
                }
            }
        }
    }

    /// `ln R(e^x)`, finite where `R` itself would under- or overflow.
    pub fn ln_cumulative_log(&self, x: f64) -> Result<f64> {
        let last = self.xs[self.xs.len() - 1];
        if x < last {
            return Ok(ln(self.cumulative_log(x)?));
        }
        let m = self.far_xs.len();
        if x >= self.far_xs[m - 1] {
            return match self.mode {
                CovMode::Convergent => self.ln_shifted_tail(x),
                CovMode::Divergent => Ok(log_add(self.far_ln[m - 1], self.ln_piece(self.far_xs[m - 1], x)?)),
            };
        }
        let k = self.far_xs.partition_point(|&v| v <= x) - 1;
        match self.mode {
            CovMode::Convergent => Ok(log_add(self.far_ln[k + 1], self.ln_piece(x, self.far_xs[k + 1])?)),
            CovMode::Divergent => Ok(log_add(self.far_ln[k], self.ln_piece(self.far_xs[k], x)?)),
        }
    }

    /// `ln ∫_lo^hi g`, rescaled by the larger endpoint value.
    fn ln_piece(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(f64::NEG_INFINITY);
        }
        let ell = |v: f64| self.density.ln_measure_at_log(v);
        let (l_lo, l_hi) = (ell(lo), ell(hi));
        if abs(l_hi - l_lo) < STEEP {
            let r = l_lo.max(l_hi);
            let i = integrate(|v| exp(ell(v) - r), lo, hi, noisy_tol(hi, r))?.value;
            return Ok(r + ln(i));
        }
        // Steep: the mass sits near the larger end, so walk away from it in doubling blocks.
        let (anchor, r, dir) = if l_lo > l_hi { (lo, l_lo, 1.0) } else { (hi, l_hi, -1.0) };
        let span = hi - lo;
        let (mut acc, mut a) = (0.0, 0.0);
        while a < span {
            let b = (2.0 * a + 1.0).min(span);
            let blk = integrate(|v| exp(ell(anchor + dir * v) - r), a, b, noisy_tol(anchor, r))?.value;
            acc += blk;
            a = b;
            if blk <= 1e-17 * acc {
                break;
            }
        }
        Ok(r + ln(acc))
    }

    /// `ln ∫_x^∞ g = ℓ(x) + ln ∫_0^∞ e^{ℓ(x+v)-ℓ(x)} dv`.
    fn ln_shifted_tail(&self, x: f64) -> Result<f64> {
        let ell = |v: f64| self.density.ln_measure_at_log(v);
        let l0 = ell(x);
        if !l0.is_finite() {
            return Err(domain(format!("density not representable at x = {x}")));
        }
        let (mut acc, mut lo, mut prev) = (0.0, 0.0, f64::NAN);
        for _ in 0..200 {
            let hi = 2.0 * lo + 1.0;
            let b = integrate(|v| exp(ell(x + v) - l0), lo, hi, noisy_tol(x, l0))?.value;
            acc += b;
            lo = hi;
            let rho = b / prev;
            prev = b;
            if b == 0.0 || (rho < 1.0 && b * rho / (1.0 - rho) <= 1e-14 * acc) {
                break;
            }
        }
        Ok(l0 + ln(acc))
    }

    /// Fill the far table starting at `x0`. `head` is `ln R_D(e^{x0})` in divergent mode.
    fn build_far(&mut self, x0: f64, head: Option<f64>) -> Result<()> {
        let mut xs = alloc::vec![x0];
        let mut x = x0;
        while x < FAR_END {
            let next = (x * FAR_RATIO).max(x + 1.0);
            if !self.density.ln_measure_at_log(next).is_finite() {
                break;
            }
            xs.push(next);
            x = next;
        }
        let m = xs.len();
        let mut lns = alloc::vec![0.0; m];
        match head {
            Some(h) => {
                lns[0] = h;
                for k in 1..m {
                    lns[k] = log_add(lns[k - 1], self.ln_piece(xs[k - 1], xs[k])?);
                }
            }
            None => {
                lns[m - 1] = self.ln_shifted_tail(xs[m - 1])?;
                for k in (0..m - 1).rev() {
                    lns[k] = log_add(lns[k + 1], self.ln_piece(xs[k], xs[k + 1])?);
                }
            }
        }
        self.far_xs = xs;
        self.far_ln = lns;
        Ok(())
    }

    /// `R_D(t)` or `R_C(t)`.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        if t < self.a * (1.0 - 1e-12) {
            return Err(domain(format!("t = {t} lies before the left endpoint {}", self.a)));
        }
        if t >= self.t0 {
            return self.cumulative_log(ln(t));
        }
        let part = if t > self.a { integrate(|s| self.density.eval(s), self.a, t, QUAD_TOL)?.value } else { 0.0 };
        Ok(match self.mode {
            CovMode::Divergent => part,
            CovMode::Convergent => self.cum[0] + self.prefix - part,
        })
    }

    fn to_phi(&self, c: f64) -> f64 {
        match self.mode {
            CovMode::Divergent => c,
            CovMode::Convergent => 1.0 / c,
        }
    }

    /// `φ(t)`: `R_D(t)` or `Q(t)`.
    pub fn forward(&self, t: f64) -> Result<f64> {
        Ok(self.to_phi(self.cumulative(t)?))
    }

    /// `φ(e^x)`.
    pub fn forward_log(&self, x: f64) -> Result<f64> {
        Ok(self.to_phi(self.cumulative_log(x)?))
    }

    /// `φ'(t)`.
    pub fn phi_prime(&self, t: f64) -> Result<f64> {
        let d = self.density.eval(t);
        Ok(match self.mode {
            CovMode::Divergent => d,
            CovMode::Convergent => {
                let rc = self.cumulative(t)?;
                d / (rc * rc)
            }
        })
    }

    /// `ln φ'(e^x)`.
    pub fn ln_phi_prime_at_log(&self, x: f64) -> Result<f64> {
        let ld = self.density.ln_value_at_log(x);
        Ok(match self.mode {
            CovMode::Divergent => ld,
            CovMode::Convergent => ld - 2.0 * self.ln_cumulative_log(x)?,
        })
    }

    /// `φ^{-1}(s)`.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        let target = self.target(s)?;
        if self.in_prefix(target) {
            return self.inverse_prefix(target);
        }
        Ok(exp(self.inverse_table(target)?))
    }

    /// `ln φ^{-1}(s)`.
    pub fn inverse_log(&self, s: f64) -> Result<f64> {
        let target = self.target(s)?;
        if self.in_prefix(target) {
            return Ok(ln(self.inverse_prefix(target)?));
        }
        self.inverse_table(target)
    }

    fn target(&self, s: f64) -> Result<f64> {
        let c = self.to_phi(s);
        let head = match self.mode {
            CovMode::Divergent => 0.0,
            CovMode::Convergent => self.cum[0] + self.prefix,
        };
        let ok = match self.mode {
            CovMode::Divergent => s >= 0.0 && s.is_finite(),
            CovMode::Convergent => s > 0.0 && c <= head * (1.0 + 1e-12),
        };
        if ok {
            Ok(c)
        } else {
            Err(domain(format!("s = {s} lies outside the range of the change of variable")))
        }
    }

    fn in_prefix(&self, target: f64) -> bool {
        self.a < self.t0
            && match self.mode {
                CovMode::Divergent => target < self.prefix,
                CovMode::Convergent => target > self.cum[0],
            }
    }

    /// Signed residual that is increasing in the unknown.
    fn residual_log(&self, x: f64, target: f64) -> Result<f64> {
        let c = self.cumulative_log(x)?;
        Ok(match self.mode {
            CovMode::Divergent => c - target,
            CovMode::Convergent => target - c,
        })
    }

    fn inverse_table(&self, target: f64) -> Result<f64> {
        let last = self.xs.len() - 1;
        let (lo, hi) = match self.mode {
            CovMode::Divergent if target <= self.cum[last] => {
                let j = self.cum.partition_point(|&c| c <= target);
                (self.xs[j.saturating_sub(1)], self.xs[j.min(last)])
            }
            CovMode::Convergent if target >= self.cum[last] => {
                let j = self.cum.partition_point(|&c| c >= target);
                (self.xs[j.saturating_sub(1)], self.xs[j.min(last)])
            }
            _ => {
                let mut lo = self.xs[last];
                let mut step = 1.0_f64.max(lo.abs());
                let mut hi = lo + step;
                while self.residual_log(hi, target)? < 0.0 {
                    lo = hi;
                    step *= 2.0;
                    hi = lo + step;
                    if !hi.is_finite() {
                        return Err(domain("inverse out of range"));
                    }
                }
                (lo, hi)
            }
        };
        self.solve(lo, hi, target)
    }

    fn solve(&self, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.residual_log(x, target)?;
            if f == 0.0 {
                return Ok(x);
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = match self.mode {
                CovMode::Divergent => self.g(x),
                CovMode::Convergent => self.g(x),
            };
            let newton = x - f / slope;
            let next = if newton > lo && newton < hi && newton.is_finite() { newton } else { 0.5 * (lo + hi) };
            let scale = 1.0_f64.max(abs(x));
            if abs(next - x) <= 1e-15 * scale || hi - lo <= 1e-15 * scale {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    fn inverse_prefix(&self, target: f64) -> Result<f64> {
        let want = match self.mode {
            CovMode::Divergent => target,
            CovMode::Convergent => self.cum[0] + self.prefix - target,
        };
        let (mut lo, mut hi) = (self.a, self.t0);
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let part = if t > self.a { integrate(|s| self.density.eval(s), self.a, t, QUAD_TOL)?.value } else { 0.0 };
            let f = part - want;
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = t - f / self.density.eval(t);
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if abs(next - t) <= 1e-15 * 1.0_f64.max(t) || hi - lo <= 1e-16 {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::geomspace;

    #[test]
    fn unit_density_from_zero() {
        let cov = build_change_of_variable(&CoefficientExpr::constant(1.0), 2.0, 0.0).unwrap();
        assert_eq!(cov.mode(), CovMode::Divergent);
        for t in [0.0, 0.3, 1.0, 7.5, 1e5, 1e10] {
            assert!((cov.forward(t).unwrap() - t).abs() <= 1e-12 * t.max(1.0));
            assert!((cov.inverse(t).unwrap() - t).abs() <= 1e-10 * t.max(1.0));
        }
    }

    #[test]
    fn r_inverse_t() {
        let cov = build_change_of_variable(&CoefficientExpr::new(1.0, -1.0), 2.0, 1.0).unwrap();
        for t in [1.0, 2.0, 33.0, 1e4, 1e9] {
            let exact = (t * t - 1.0) / 2.0;
            assert!((cov.forward(t).unwrap() - exact).abs() <= 1e-11 * exact.max(1.0));
        }
    }

    #[test]
    fn r_t_squared_convergent() {
        let cov = build_change_of_variable(&CoefficientExpr::new(1.0, 2.0), 2.0, 1.0).unwrap();
        assert_eq!(cov.mode(), CovMode::Convergent);
        for t in [1.0, 3.0, 1e3, 1e9, 1e12] {
            assert!((cov.cumulative(t).unwrap() * t - 1.0).abs() < 1e-10);
            assert!((cov.forward(t).unwrap() / t - 1.0).abs() < 1e-10);
            assert!((cov.inverse(t).unwrap() / t - 1.0).abs() < 1e-10);
        }
        assert!(cov.inverse(0.5).is_err());
    }

    #[test]
    fn round_trip_on_samples() {
        let r = CoefficientExpr::new(1.0, 2.0).with_logs([2.0]);
        let cov = build_change_of_variable(&r, 2.0, core::f64::consts::E).unwrap();
        for t in geomspace(3.0, 1e8, 100) {
            let s = cov.forward(t).unwrap();
            assert!((cov.inverse(s).unwrap() / t - 1.0).abs() < 1e-8);
            assert!((cov.cumulative(t).unwrap() * s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_case_reaches_huge_arguments() {
        // r = t, alpha = 2: R_D = ln t - ln 16.
        let cov = build_change_of_variable(&CoefficientExpr::new(1.0, 1.0), 2.0, 16.0).unwrap();
        let x = cov.inverse_log(1e6).unwrap();
        assert!((x - (1e6 + ln(16.0))).abs() < 1e-6);
    }
}
