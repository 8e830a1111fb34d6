//! Necessity of the integral smallness condition for slowly varying increasing
//! solutions, plus the Riccati side-check `w = r Φ(y'/y)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::support::{coefficient_grid, grid, lp_over_lr, rv_config_for, sample, tail_start, vanishing_trend};
use super::sv::trintp_trace;
use super::{EngineConfig, Trace};
use crate::dde::{classify_trajectory, Monotonicity, Trajectory};
use crate::error::{precondition, Result};
use crate::math::{abs, ln, powf};
use crate::model::HalfLinearEquation;
use crate::rvkit::estimate_rv_index_log;

/// Riccati residuals at or above this relative level are flagged.
pub const RICCATI_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiCheck {
    pub points: usize,
    /// Largest `|w' - p Φ(y∘τ/y) + (α-1) r^{1-β}|w|^β|` relative to the largest term.
    pub max_rel: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NecessityReport {
    /// False when the preconditions fail; the remaining fields are then partial.
    pub applicable: bool,
    pub detail: String,
    /// Index of `y` on the tail; `None` when it could not be estimated.
    pub sv_index: Option<f64>,
    pub trintp: Trace,
    pub trintp_vanishes: bool,
    /// `t^{α+δ-γ} L_p/L_r` when `p` is structured.
    pub tlplr: Option<Trace>,
    pub tlplr_vanishes: Option<bool>,
    /// An increasing slowly varying trajectory next to a non-vanishing trend.
    pub alarm: bool,
    pub riccati: Option<RiccatiCheck>,
    pub pass: bool,
}

/// `w = u/Φ(y)` and its Riccati residual at `points`.
pub fn riccati_residual(traj: &Trajectory, points: &[f64], rel_step: f64) -> Result<RiccatiCheck> {
    let eq = traj.equation();
    let ex = eq.exponents();
    let (alpha, beta) = (eq.alpha(), eq.beta());
    let w = |t: f64| -> Result<f64> {
        let y = traj.y_at(t).ok_or_else(|| precondition(format!("trajectory undefined at {t}")))?;
        let u = traj.quasi_at(t).ok_or_else(|| precondition(format!("trajectory undefined at {t}")))?;
        Ok(u / ex.phi(y))
    };
    let mut worst = 0.0_f64;
    for &t in points {
        let h = rel_step * t;
        let dw = (w(t - 2.0 * h)? - 8.0 * w(t - h)? + 8.0 * w(t + h)? - w(t + 2.0 * h)?) / (12.0 * h);
        let y = traj.y_at(t).unwrap_or(f64::NAN);
        let yt = traj.y_ext(eq.tau().eval(t)).ok_or_else(|| precondition(format!("history undefined at tau({t})")))?;
        let drive = eq.p().eval(t) * ex.phi(yt / y);
        let damp = (alpha - 1.0) * powf(eq.r().eval(t), 1.0 - beta) * powf(abs(w(t)?), beta);
        let scale = abs(dw).max(abs(drive)).max(abs(damp));
        let rel = abs(dw - drive + damp) / scale;
        if !rel.is_finite() {
            return Err(precondition(format!("Riccati residual not finite at t = {t}")));
        }
        worst = worst.max(rel);
    }
    Ok(RiccatiCheck { points: points.len(), max_rel: worst, pass: worst < RICCATI_TOL })
}

fn inapplicable(detail: String) -> NecessityReport {
    NecessityReport {
        applicable: false,
        detail,
        sv_index: None,
        trintp: Trace::new("trintp", Vec::new()),
        trintp_vanishes: false,
        tlplr: None,
        tlplr_vanishes: None,
        alarm: false,
        riccati: None,
        pass: false,
    }
}

pub fn check_necessity(eq: &HalfLinearEquation, traj: &Trajectory, cfg: &EngineConfig) -> Result<NecessityReport> {
    let alpha = eq.alpha();
    let Some(gamma) = eq.gamma() else {
        return Ok(inapplicable("r has no structural index".into()));
    };
    if gamma <= alpha - 1.0 {
        return Ok(inapplicable(format!("gamma = {gamma} is not above alpha - 1 = {}", alpha - 1.0)));
    }
    if eq.tau().ratio_bound().is_none() {
        return Ok(inapplicable("tau(t) comparable to t is not known for a custom delay".into()));
    }
    let class = classify_trajectory(traj, cfg.tail_fraction)?;
    if class.monotonicity != Monotonicity::Increasing {
        return Ok(inapplicable(format!("trajectory is {:?}, not increasing", class.monotonicity)));
    }
    let ts = grid(tail_start(traj, cfg), traj.t_end(), 60);
    let ln_y = sample(&ts, |t| traj.y_at(t).filter(|y| *y > 0.0).map(ln))?;
    let sv_index = estimate_rv_index_log(&ts, &ln_y, &rv_config_for(&ts)).ok().map(|e| e.index);
    let is_sv = sv_index.is_some_and(|i| abs(i) <= cfg.index_tolerance);

    let trintp = trintp_trace(eq, cfg)?;
    let (trintp_vanishes, t_last, t_detail) = vanishing_trend(&trintp, cfg.trend_threshold);
    let (tlplr, tlplr_vanishes) = match eq.delta() {
        Some(delta) => {
            let l = lp_over_lr(eq.p(), eq.r());
            let e = alpha + delta - gamma;
            let pts: Vec<(f64, f64)> =
                coefficient_grid(eq.a(), cfg).iter().map(|&t| (t, powf(t, e) * l.eval(t))).collect();
            let v = vanishing_trend(&pts, cfg.trend_threshold).0;
            (Some(Trace::new("tLpLr", pts)), Some(v))
        }
        None => (None, None),
    };
    let vanishes = trintp_vanishes && tlplr_vanishes.unwrap_or(true);
    let alarm = is_sv && !vanishes;

    let lo = tail_start(traj, cfg) * 1.01;
    let hi = traj.t_end() * 0.99;
    let riccati = if hi > lo { Some(riccati_residual(traj, &grid(lo, hi, 4), 1e-3)?) } else { None };

    let detail = format!(
        "index of y {}; trintp final {:.6e} ({t_detail}){}",
        sv_index.map_or("unavailable".into(), |i| format!("{i:.4}")),
        t_last,
        if alarm { "; ALARM: slowly varying increasing trajectory with non-vanishing trend" } else { "" }
    );
    let pass = is_sv && vanishes && !alarm && riccati.as_ref().map_or(true, |r| r.pass);
    Ok(NecessityReport {
        applicable: true,
        detail,
        sv_index,
        trintp: Trace::new("trintp", trintp),
        trintp_vanishes,
        tlplr,
        tlplr_vanishes,
        alarm,
        riccati,
        pass,
    })
}
