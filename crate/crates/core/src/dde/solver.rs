//! Classical RK4 with step-halving error control and a causality-capped step.

use alloc::format;
use alloc::vec::Vec;

use super::trajectory::{hermite, locate, SolveStatus, Trajectory};
use super::HistorySpec;
use crate::error::{invalid, Error, Result};
use crate::math::abs;
use crate::model::HalfLinearEquation;

/// Step control for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Fixed step, or the initial step in adaptive mode.
    pub step: f64,
    /// Per-step tolerance on the step-halving difference; `None` means fixed steps.
    pub tol: Option<f64>,
    /// Adaptive mode caps `h ≤ max_step_ratio · t`.
    pub max_step_ratio: f64,
    /// Hard limit on accepted nodes.
    pub max_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { step: 1e-2, tol: Some(1e-10), max_step_ratio: 0.02, max_nodes: 5_000_000 }
    }
}

impl SolverOptions {
    pub fn fixed(step: f64) -> Self {
        Self { step, tol: None, ..Self::default() }
    }

    pub fn adaptive(step: f64, tol: f64) -> Self {
        Self { step, tol: Some(tol), ..Self::default() }
    }
}

struct Nodes {
    ts: Vec<f64>,
    ys: Vec<f64>,
    yps: Vec<f64>,
    us: Vec<f64>,
    ups: Vec<f64>,
}

struct System<'a> {
    eq: &'a HalfLinearEquation,
    history: &'a HistorySpec,
    ode: bool,
}

impl System<'_> {
    /// `y(τ(s))` from history or dense output; never reads past the front.
    fn delayed(&self, nodes: &Nodes, s: f64) -> Result<f64> {
        let ts = self.eq.tau().eval(s);
        let a = nodes.ts[0];
        if ts <= a {
            return Ok(self.history.value(ts));
        }
        let front = nodes.ts[nodes.ts.len() - 1];
        if ts > front * (1.0 + 1e-14) {
            return Err(Error::Causality { lookup: ts, front });
        }
        let ts = ts.min(front);
        let i = locate(&nodes.ts, ts).ok_or(Error::Causality { lookup: ts, front })?;
        if nodes.ts.len() == 1 {
            return Ok(nodes.ys[0]);
        }
        Ok(hermite(nodes.ts[i], nodes.ts[i + 1], nodes.ys[i], nodes.ys[i + 1], nodes.yps[i], nodes.yps[i + 1], ts).0)
    }

    fn y_prime(&self, t: f64, u: f64) -> f64 {
        self.eq.exponents().phi_inv(u / self.eq.r().eval(t))
    }

    fn u_prime(&self, nodes: &Nodes, t: f64, y: f64) -> Result<f64> {
        let yd = if self.ode { y } else { self.delayed(nodes, t)? };
        Ok(self.eq.p().eval(t) * self.eq.exponents().phi(yd))
    }

    fn rk4(&self, nodes: &Nodes, t: f64, y: f64, u: f64, h: f64) -> Result<(f64, f64)> {
        let k1y = self.y_prime(t, u);
        let k1u = self.u_prime(nodes, t, y)?;
        let tm = t + 0.5 * h;
        let (y2, u2) = (y + 0.5 * h * k1y, u + 0.5 * h * k1u);
        let k2y = self.y_prime(tm, u2);
        let k2u = self.u_prime(nodes, tm, y2)?;
        let (y3, u3) = (y + 0.5 * h * k2y, u + 0.5 * h * k2u);
        let k3y = self.y_prime(tm, u3);
        let k3u = self.u_prime(nodes, tm, y3)?;
        let (y4, u4) = (y + h * k3y, u + h * k3u);
        let k4y = self.y_prime(t + h, u4);
        let k4u = self.u_prime(nodes, t + h, y4)?;
        Ok((
            y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        ))
    }

    fn push(&self, nodes: &mut Nodes, t: f64, y: f64, u: f64) -> Result<()> {
        let yp = self.y_prime(t, u);
        nodes.ts.push(t);
        nodes.ys.push(y);
        nodes.yps.push(yp);
        nodes.us.push(u);
        let up = self.u_prime(nodes, t, y)?;
        nodes.ups.push(up);
        Ok(())
    }

    /// Largest step keeping every delayed argument behind the front `t`.
    fn causal_cap(&self, t: f64, h: f64) -> Result<f64> {
        if self.ode {
            return Ok(h);
        }
        if let Some(c) = self.eq.tau().causal_step(t) {
            return Ok(h.min(c));
        }
        let mut h = h;
        while self.eq.tau().eval(t + h) > t {
            h *= 0.5;
            if h < 1e-14 * t.max(1.0) {
                return Err(Error::UnsupportedDelay(format!("tau(t) meets t near t = {t}")));
            }
        }
        Ok(h)
    }
}

/// Integrate from `eq.a` to `t_end`.
pub fn solve(eq: &HalfLinearEquation, history: &HistorySpec, t_end: f64, opts: &SolverOptions) -> Result<Trajectory> {
    let a = eq.a();
    if !(t_end > a) {
        return Err(invalid(format!("t_end = {t_end} must exceed a = {a}")));
    }
    if !(opts.step > 0.0) || opts.tol.is_some_and(|tol| !(tol > 0.0)) {
        return Err(invalid("step and tolerance must be positive"));
    }
    let y0 = history.value(a);
    if !(y0 > 0.0 && y0.is_finite()) {
        return Err(invalid(format!("history must be positive at a, got {y0}")));
    }
    let sys = System { eq, history, ode: eq.is_ode() };
    let mut nodes = Nodes { ts: Vec::new(), ys: Vec::new(), yps: Vec::new(), us: Vec::new(), ups: Vec::new() };
    let u0 = history.start_quasi(eq);
    sys.push(&mut nodes, a, y0, u0)?;

    let (mut t, mut y, mut u) = (a, y0, u0);
    let mut h_cur = opts.step;
    let mut status = SolveStatus::Completed;
    let end_tol = 1e-13 * t_end.max(1.0);
    while t < t_end - end_tol {
        if nodes.ts.len() >= opts.max_nodes {
            status = SolveStatus::StepUnderflow(t);
            break;
        }
        let mut h = h_cur;
        if opts.tol.is_some() {
            h = h.min(opts.max_step_ratio * t.max(1e-300));
        }
        h = sys.causal_cap(t, h)?;
        let last = t + h >= t_end - end_tol;
        if last {
            h = t_end - t;
        }
        let (yn, un, accepted_mid) = match opts.tol {
            None => {
                let (yn, un) = sys.rk4(&nodes, t, y, u, h)?;
                (yn, un, None)
            }
            Some(tol) => {
                let (y1, u1) = sys.rk4(&nodes, t, y, u, h)?;
                let (ym, um) = sys.rk4(&nodes, t, y, u, 0.5 * h)?;
                let (y2, u2) = sys.rk4(&nodes, t + 0.5 * h, ym, um, 0.5 * h)?;
                let ymax = nodes.ys.iter().fold(0.0_f64, |m, v| m.max(abs(*v)));
                let umax = nodes.us.iter().fold(0.0_f64, |m, v| m.max(abs(*v)));
                let sy = abs(y2).max(1e-12 * ymax).max(f64::MIN_POSITIVE);
                let su = abs(u2).max(1e-12 * umax).max(f64::MIN_POSITIVE);
                let err = (abs(y2 - y1) / sy).max(abs(u2 - u1) / su);
                if !(err <= tol) {
                    if err.is_finite() || h > 1e-12 * t.max(1.0) {
                        h_cur = 0.5 * h;
                        if h_cur < 1e-13 * t.max(1.0) {
                            status = SolveStatus::StepUnderflow(t);
                            break;
                        }
                        continue;
                    }
                }
                if err < tol / 32.0 && !last {
                    h_cur = 2.0 * h;
                } else if !last {
                    h_cur = h;
                }
                (y2, u2, Some((ym, um)))
            }
        };
        if !(yn.is_finite() && un.is_finite()) {
            status = SolveStatus::Overflow(t + h);
            break;
        }
        if let Some((ym, um)) = accepted_mid {
            sys.push(&mut nodes, t + 0.5 * h, ym, um)?;
        }
        if yn <= 0.0 {
            status = SolveStatus::HitZero(t + h);
            break;
        }
        t = if last { t_end } else { t + h };
        y = yn;
        u = un;
        sys.push(&mut nodes, t, y, u)?;
    }
    Ok(Trajectory {
        ts: nodes.ts,
        ys: nodes.ys,
        y_primes: nodes.yps,
        quasis: nodes.us,
        quasi_primes: nodes.ups,
        status,
        eq: eq.clone(),
        history: history.clone(),
    })
}
