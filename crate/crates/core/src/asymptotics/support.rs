//! Grids, trend checks and limit extrapolation shared by the engines.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{EngineConfig, HypothesisReport};
use crate::dde::{classify_trajectory, ClassLabel, SolutionClass, Trajectory};
use crate::error::{precondition, Error, Result};
use crate::extrapolate::extrapolate_limit;
use crate::math::{abs, geomspace, ln, powf};
use crate::model::{CoefficientExpr, DelayMap};
use crate::rvkit::RvConfig;

const EPS: f64 = 1e-12;

/// Geometric grid with `per_decade` points per decade (at least two points).
pub(crate) fn grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = ln(hi / lo) / core::f64::consts::LN_10;
    let n = ((decades * per_decade as f64) as usize).max(1) + 1;
    geomspace(lo, hi, n)
}

/// Grid for coefficient trends: four decades ending at the horizon.
pub(crate) fn coefficient_grid(a: f64, cfg: &EngineConfig) -> Vec<f64> {
    let lo = (2.0 * a).max(cfg.horizon * 1e-4).max(1.0);
    grid(lo, cfg.horizon.max(10.0 * lo), cfg.per_decade)
}

/// Decreasing over the last two decades of the trace and ending below `threshold`.
pub(crate) fn vanishing_trend(points: &[(f64, f64)], threshold: f64) -> (bool, f64, String) {
    let Some(&(t_end, last)) = points.last() else {
        return (false, f64::NAN, "empty trace".into());
    };
    let tail: Vec<f64> = points.iter().filter(|p| p.0 >= t_end / 100.0 * (1.0 - EPS)).map(|p| p.1).collect();
    let finite = tail.iter().all(|v| v.is_finite());
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-300);
    let pass = finite && decreasing && abs(last) < threshold;
    let detail = format!(
        "{} over the last two decades, final {:.6e} vs threshold {threshold}",
        if decreasing { "decreasing" } else { "not decreasing" },
        last
    );
    (pass, last, detail)
}

/// Whether a structured, regularly varying expression tends to zero, decided exactly:
/// the sign of the power, then of the first nonzero iterated-log exponent.
pub(crate) fn vanishes_structurally(e: &CoefficientExpr) -> Option<bool> {
    if !e.is_regularly_varying() {
        return None;
    }
    if abs(e.power) > EPS {
        return Some(e.power < 0.0);
    }
    for &k in &e.log_powers {
        if abs(k) > EPS {
            return Some(k < 0.0);
        }
    }
    Some(false)
}

pub(crate) fn index_close(observed: f64, target: f64, rel: f64) -> bool {
    let tol = if abs(target) > EPS { rel * abs(target) } else { rel };
    abs(observed - target) <= tol
}

/// `L_p / L_r` as an expression (structured parts only).
pub(crate) fn lp_over_lr(p: &CoefficientExpr, r: &CoefficientExpr) -> CoefficientExpr {
    p.slowly_varying_expr().mul(&r.slowly_varying_expr().recip())
}

/// RV config that accepts whatever span the grid has, down to a third of a decade.
pub(crate) fn rv_config_for(grid: &[f64]) -> RvConfig {
    let decades = ln(grid[grid.len() - 1] / grid[0]) / core::f64::consts::LN_10;
    RvConfig { min_decades: decades.min(3.0).max(0.3) - 1e-9, ..RvConfig::default() }
}

/// Start of the classification tail.
pub(crate) fn tail_start(traj: &Trajectory, cfg: &EngineConfig) -> f64 {
    let (t0, t1) = (traj.t_start(), traj.t_end());
    t0 * powf(t1 / t0, 1.0 - cfg.tail_fraction)
}

/// `t` with `τ(t) = s`.
pub(crate) fn tau_inverse(tau: &DelayMap, s: f64) -> f64 {
    match tau {
        DelayMap::Shift(sigma) => s + sigma,
        DelayMap::Proportional(lambda) => s / lambda,
        DelayMap::Custom(_) => {
            let (mut lo, mut hi) = (s, s.max(1.0) * 2.0);
            while tau.eval(hi) < s {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if tau.eval(mid) < s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    }
}

/// Classify and compare against the prediction.
pub(crate) fn observe(traj: &Trajectory, report: &HypothesisReport, cfg: &EngineConfig) -> Result<SolutionClass> {
    if !report.applicable {
        return Err(precondition(format!("{} hypotheses do not hold; refusing to verify", report.theorem)));
    }
    let observed = classify_trajectory(traj, cfg.tail_fraction)?;
    if observed.label != report.predicted_class {
        return Err(Error::ClassMismatch {
            predicted: report.predicted_class.as_str().into(),
            observed: observed.label.as_str().into(),
        });
    }
    Ok(observed)
}

/// Limit of a monotone bounded sequence sampled on a geometric grid, with the
/// relative spread between the estimates from the last two windows.
pub(crate) fn limit_on_grid(values: &[f64]) -> Result<(f64, f64)> {
    let est = extrapolate_limit(values, 3)?;
    let n = values.len();
    let (last, prev) = (values[n - 1], values[n - 2]);
    // A monotone sequence cannot converge to a value behind its last sample.
    let behind = if last >= prev { est.value < last } else { est.value > last };
    if behind || !est.value.is_finite() {
        return Err(Error::Inconclusive(format!(
            "limit extrapolation {} lies behind the last sample {last}; convergence too slow at this horizon",
            est.value
        )));
    }
    Ok((est.value, est.spread))
}

pub(crate) fn predicted_label(finite_y: bool, finite_quasi: bool) -> ClassLabel {
    ClassLabel::increasing(finite_y, finite_quasi)
}

/// Values of `f` along `ts`, failing when the trajectory cannot be evaluated.
pub(crate) fn sample(ts: &[f64], f: impl Fn(f64) -> Option<f64>) -> Result<Vec<f64>> {
    ts.iter()
        .map(|&t| f(t).ok_or_else(|| precondition(format!("trajectory cannot be evaluated at t = {t}"))))
        .collect()
}

/// `∫_a^t f` at every point of the increasing grid `ts` (all `≥ a`).
pub(crate) fn cumulative_on(f: impl Fn(f64) -> f64, a: f64, ts: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ts.len());
    let (mut acc, mut lo) = (0.0, a);
    for &t in ts {
        if t > lo {
            acc += crate::quad::integrate(&f, lo, t, tol)?.value;
            lo = t;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `∫_t^∞ f` at every point of the increasing grid `ts`: one tail integral at the
/// last point, then the pieces between grid points accumulated backwards.
pub(crate) fn tails_on<I: crate::quad::Integrand>(f: &I, ts: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = ts.len();
    let mut out = alloc::vec![0.0; n];
    let mut acc = crate::quad::tail_integral(f, ts[n - 1], tol)?.value;
    out[n - 1] = acc;
    for i in (0..n - 1).rev() {
        acc += crate::quad::integrate(|t| f.value(t), ts[i], ts[i + 1], tol)?.value;
        out[i] = acc;
    }
    Ok(out)
}
