//! The reciprocal equation: `u = r Φ(y')` solves
//! `(r̃ Φ_β(u'))' = p̃ Φ_β(u∘τ)` with `r̃ = p^{1-β}`, `p̃ = τ' r^{1-β}∘τ`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::support::{grid, index_close, tau_inverse};
use super::EngineConfig;
use crate::dde::{residual_stencil, HistorySpec, ResidualStats, Trajectory};
use crate::error::{precondition, Result};
use crate::math::{abs, exp, powf};
use crate::model::{CoefficientExpr, CustomFactor, DelayMap, HalfLinearEquation};
use crate::rvkit::{estimate_rv_index_log, IndexEstimate, RvConfig};

#[derive(Debug, Clone)]
pub struct ReciprocalEquation {
    /// Degree `β` equation in the unknown `u`.
    pub equation: HalfLinearEquation,
    /// First point where `τ(t) ≥ a`, so that `r∘τ` is defined.
    pub a_rec: f64,
    /// `δ̃ = δ(1-β) - β` when `p` has a structural index.
    pub delta_tilde: Option<f64>,
}

/// Numerical confirmation of the index bookkeeping; `r_tilde` is reported only.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBookkeeping {
    pub delta_tilde: f64,
    pub p_tilde: IndexEstimate,
    pub r_tilde: IndexEstimate,
    pub pass: bool,
}

/// `τ'(t) [r(τ(t))/r(t)]^{1-β}`, the part of `p̃` that is not structured.
fn delay_factor(r: &CoefficientExpr, tau: &DelayMap, beta: f64) -> CustomFactor {
    let k = 1.0 - beta;
    let (r1, tau1) = (r.clone(), tau.clone());
    let value = move |t: f64| tau1.deriv(t) * exp(k * (r1.ln_eval(tau1.eval(t)) - r1.ln_eval(t)));
    let value2 = value.clone();
    let (r2, tau2) = (r.clone(), tau.clone());
    let deriv = move |t: f64| {
        let s = tau2.eval(t);
        let d = tau2.deriv(t);
        let dd = match tau2 {
            DelayMap::Custom(_) => {
                let h = 1e-5 * t;
                (tau2.deriv(t + h) - tau2.deriv(t - h)) / (2.0 * h)
            }
            _ => 0.0,
        };
        let w = k * (r2.log_derivative(s) / s * d - r2.log_derivative(t) / t) + dd / d;
        value2(t) * w
    };
    CustomFactor::new(format!("tau'*(r(tau)/r)^{k}"), value, deriv)
}

pub fn reciprocal_transform(eq: &HalfLinearEquation) -> Result<ReciprocalEquation> {
    let beta = eq.beta();
    let r_t = eq.p().powf(1.0 - beta);
    let base = eq.r().powf(1.0 - beta);
    let r = eq.r();
    let pure_power = r.log_depth() == 0 && r.is_regularly_varying();
    let p_t = match eq.tau() {
        _ if eq.is_ode() => base,
        // r(λt)/r(t) = λ^γ exactly, so p̃ stays structured.
        DelayMap::Proportional(l) if pure_power => base.scaled(l * powf(*l, r.power * (1.0 - beta))),
        tau => base.mul(&CoefficientExpr::constant(1.0).with_custom(delay_factor(r, tau, beta))),
    };
    let a_rec = if eq.is_ode() { eq.a() } else { eq.a().max(tau_inverse(eq.tau(), eq.a())) };
    let equation = HalfLinearEquation::new(beta, r_t, p_t, eq.tau().clone(), a_rec)?;
    let delta_tilde = eq.delta().map(|d| d * (1.0 - beta) - beta);
    Ok(ReciprocalEquation { equation, a_rec, delta_tilde })
}

impl ReciprocalEquation {
    /// Index of `p̃` against `δ̃` and of `r̃` against `δ̃ + β` on four decades ending at the horizon.
    pub fn bookkeeping(&self, cfg: &EngineConfig) -> Result<IndexBookkeeping> {
        let dt = self.delta_tilde.ok_or_else(|| precondition("p has no structural index"))?;
        let lo = (cfg.horizon * 1e-4).max(10.0 * self.a_rec);
        let g = grid(lo, cfg.horizon.max(1e3 * lo), 60);
        let rv = RvConfig { min_decades: 1.0, ..RvConfig::default() };
        let ln_p: Vec<f64> = g.iter().map(|&t| self.equation.p().ln_eval(t)).collect();
        let ln_r: Vec<f64> = g.iter().map(|&t| self.equation.r().ln_eval(t)).collect();
        let p_tilde = estimate_rv_index_log(&g, &ln_p, &rv)?;
        let r_tilde = estimate_rv_index_log(&g, &ln_r, &rv)?;
        let beta = self.equation.alpha();
        // r̃ = p^{1-β} is structured whenever δ exists, so its index is checked exactly.
        let r_exact = self.equation.gamma().is_some_and(|g| abs(g - (dt + beta)) < 1e-9);
        let pass = index_close(p_tilde.index, dt, cfg.index_tolerance) && r_exact;
        Ok(IndexBookkeeping { delta_tilde: dt, p_tilde, r_tilde, pass })
    }

    /// Residual of `u = y^{[1]}` in the reciprocal equation at `points`, using
    /// five-point stencils of relative step `rel_step` on the dense output.
    pub fn check_trajectory(&self, traj: &Trajectory, points: &[f64], rel_step: f64) -> Result<ResidualStats> {
        for &t in points {
            let lo = self.equation.tau().eval(t * (1.0 - 2.0 * rel_step));
            if lo < traj.t_start() || t * (1.0 + 2.0 * rel_step) > traj.t_end() || t < self.a_rec {
                return Err(precondition(format!("stencil at t = {t} leaves the trajectory")));
            }
        }
        // u' comes from the original equation, u' = p Φ(y∘τ), not from differentiating
        // the interpolant of u, whose derivative is only third-order accurate.
        let orig = traj.equation();
        let ex = orig.exponents();
        residual_stencil(
            &self.equation,
            |t| traj.quasi_at(t).unwrap_or(f64::NAN),
            |t| orig.p().eval(t) * ex.phi(traj.y_ext(orig.tau().eval(t)).unwrap_or(f64::NAN)),
            points,
            rel_step,
        )
    }
}

/// The quasiderivative of `traj` as a trajectory of the reciprocal equation,
/// restricted to `[a_rec, t_end]`.
pub fn reciprocal_trajectory(rec: &ReciprocalEquation, traj: &Trajectory) -> Result<Trajectory> {
    let start = traj.ts.partition_point(|&t| t < rec.a_rec);
    if traj.ts.len() - start < 2 {
        return Err(precondition(format!("trajectory ends before a_rec = {}", rec.a_rec)));
    }
    let eq = &rec.equation;
    let ex = eq.exponents();
    let mut ts = Vec::with_capacity(traj.ts.len() - start + 1);
    let (mut us, mut ups, mut qs, mut qps) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut push = |t: f64, u: f64, up: f64| {
        ts.push(t);
        us.push(u);
        ups.push(up);
        qs.push(eq.r().eval(t) * ex.phi(up));
        let ut = traj.quasi_ext(eq.tau().eval(t)).unwrap_or(f64::NAN);
        qps.push(eq.p().eval(t) * ex.phi(ut));
    };
    if traj.ts[start] > rec.a_rec {
        let (u, up) = (traj.quasi_at(rec.a_rec), traj.quasi_prime_at(rec.a_rec));
        push(rec.a_rec, u.unwrap_or(f64::NAN), up.unwrap_or(f64::NAN));
    }
    for i in start..traj.ts.len() {
        push(traj.ts[i], traj.quasis[i], traj.quasi_primes[i]);
    }
    let shared = Arc::new(traj.clone());
    let (h1, h2) = (shared.clone(), shared);
    let history = HistorySpec::new(
        move |t| h1.quasi_ext(t).unwrap_or(f64::NAN),
        move |t| h2.quasi_prime_at(t).unwrap_or(f64::NAN),
    );
    Ok(Trajectory {
        ts,
        ys: us,
        y_primes: ups,
        quasis: qs,
        quasi_primes: qps,
        status: traj.status,
        eq: eq.clone(),
        history,
    })
}

