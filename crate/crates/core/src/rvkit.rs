//! Regular variation from samples: index estimation, normalized representation,
//! Karamata integration and de Haan Π checks.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, invalid, precondition, Result};
use crate::math::{abs, geomspace, ln, ls_slope, sqrt};
use crate::model::CoefficientExpr;
use crate::quad::{classify_improper, integrate, tail_integral};

/// Tuning of the index estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RvConfig {
    /// `|index| ≤ sv_threshold` is read as slowly varying.
    pub sv_threshold: f64,
    /// Maximum change between the last two window slopes for a stable verdict.
    pub stability: f64,
    /// Minimum span of the grid in decades.
    pub min_decades: f64,
}

impl Default for RvConfig {
    fn default() -> Self {
        Self { sv_threshold: 0.05, stability: 0.02, min_decades: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RvVerdict {
    Rv(f64),
    Sv,
    NotRv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEstimate {
    pub index: f64,
    pub stderr: f64,
    /// The trailing window the index was read from.
    pub window: (f64, f64),
    pub verdict: RvVerdict,
    /// Set when the SV/RV decision is marginal at this sample size.
    pub boundary: bool,
    /// Per-decade slopes (or mean log-derivatives), in increasing `t`.
    pub window_values: Vec<f64>,
}

/// Geometric grid with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(format!("grid bounds must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let n = (ln(hi / lo) / core::f64::consts::LN_10 * per_decade as f64) as usize + 1;
    Ok(geomspace(lo, hi, n.max(2)))
}

/// 60 points per decade over `[10^2, 10^6]`.
pub fn default_grid() -> Vec<f64> {
    geomspace(1e2, 1e6, 241)
}

fn decades(grid: &[f64]) -> f64 {
    ln(grid[grid.len() - 1] / grid[0]) / core::f64::consts::LN_10
}

/// Index ranges of decade windows counted back from the top, returned in increasing `t`.
fn decade_windows(grid: &[f64]) -> Vec<(usize, usize)> {
    let hi = grid[grid.len() - 1];
    let m = crate::math::floor(decades(grid) + 1e-9).max(1.0) as usize;
    let mut out = Vec::new();
    for k in (0..m).rev() {
        let top = hi / crate::math::powf(10.0, k as f64) * (1.0 + 1e-12);
        let bottom = hi / crate::math::powf(10.0, (k + 1) as f64) * (1.0 - 1e-12);
        let i0 = grid.partition_point(|&t| t < bottom);
        let i1 = grid.partition_point(|&t| t <= top);
        if i1 >= i0 + 3 {
            out.push((i0, i1));
        }
    }
    out
}

fn check_grid(grid: &[f64], cfg: &RvConfig) -> Result<()> {
    if grid.len() < 5 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
        return Err(precondition("grid must be positive, increasing and have at least 5 points"));
    }
    if decades(grid) < cfg.min_decades - 1e-9 {
        return Err(precondition(format!(
            "grid spans {:.3} decades, need at least {}",
            decades(grid),
            cfg.min_decades
        )));
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn decide(index: f64, stderr: f64, window: (f64, f64), values: Vec<f64>, stderrs: Vec<f64>, cfg: &RvConfig) -> IndexEstimate {
    let m = values.len();
    let monotone = m >= 2
        && (values.windows(2).all(|w| w[1] > w[0]) || values.windows(2).all(|w| w[1] < w[0]));
    let drift = if m >= 2 { abs(values[m - 1] - values[0]) } else { 0.0 };
    let noise = if stderrs.is_empty() { 0.0 } else { median(stderrs) };
    let (verdict, boundary) = if monotone && drift > 1f64.max(10.0 * noise) {
        (RvVerdict::NotRv, false)
    } else {
        let stable = m < 2 || abs(values[m - 1] - values[m - 2]) < cfg.stability;
        let thr = cfg.sv_threshold;
        if abs(index) <= thr && stable {
            (RvVerdict::Sv, abs(index) > 0.5 * thr)
        } else {
            (RvVerdict::Rv(index), abs(index) <= 2.0 * thr)
        }
    };
    IndexEstimate { index, stderr, window, verdict, boundary, window_values: values }
}

/// Index from `ln f` sampled on a geometric grid.
pub fn estimate_rv_index_log(grid: &[f64], ln_values: &[f64], cfg: &RvConfig) -> Result<IndexEstimate> {
    check_grid(grid, cfg)?;
    if grid.len() != ln_values.len() {
        return Err(invalid("grid and samples differ in length"));
    }
    if let Some(i) = ln_values.iter().position(|v| !v.is_finite()) {
        return Err(domain(format!("sample at t = {} is not positive and finite", grid[i])));
    }
    let lt: Vec<f64> = grid.iter().map(|&t| ln(t)).collect();
    let mut slopes = Vec::new();
    let mut errs = Vec::new();
    let mut last = (0.0, 0.0, (0.0, 0.0));
    for (i0, i1) in decade_windows(grid) {
        let (s, e) = ls_slope(&lt[i0..i1], &ln_values[i0..i1]);
        slopes.push(s);
        errs.push(e);
        last = (s, e, (grid[i0], grid[i1 - 1]));
    }
    Ok(decide(last.0, last.1, last.2, slopes, errs, cfg))
}

/// Least-squares index of a positive function sampled on a geometric grid.
pub fn estimate_rv_index(grid: &[f64], values: &[f64], cfg: &RvConfig) -> Result<IndexEstimate> {
    if let Some(i) = values.iter().position(|&v| !(v > 0.0)) {
        return Err(domain(format!("sample {} at t = {} is not positive", values[i], grid.get(i).copied().unwrap_or(f64::NAN))));
    }
    let lv: Vec<f64> = values.iter().map(|&v| ln(v)).collect();
    estimate_rv_index_log(grid, &lv, cfg)
}

/// Index from a sampled trace of `ω(t) = t f'(t)/f(t)`.
pub fn nrv_index_from_trace(grid: &[f64], omegas: &[f64], cfg: &RvConfig) -> Result<IndexEstimate> {
    check_grid(grid, cfg)?;
    let mut means = Vec::new();
    let mut errs = Vec::new();
    let mut last = (0.0, 0.0, (0.0, 0.0));
    for (i0, i1) in decade_windows(grid) {
        let w = &omegas[i0..i1];
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let err = sqrt(var / n);
        means.push(mean);
        errs.push(err);
        last = (mean, err, (grid[i0], grid[i1 - 1]));
    }
    Ok(decide(last.0, last.1, last.2, means, errs, cfg))
}

/// `ω(t) = t f'(t)/f(t)` along the grid.
pub fn representation_trace(f: impl Fn(f64) -> f64, f_prime: impl Fn(f64) -> f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&t| {
            let v = f(t);
            if !(v > 0.0) {
                return Err(domain(format!("f({t}) = {v} is not positive")));
            }
            Ok((t, t * f_prime(t) / v))
        })
        .collect()
}

/// Trailing mean and drift of `t f'(t)/f(t)`.
pub fn nrv_index_from_logderivative(
    f: impl Fn(f64) -> f64,
    f_prime: impl Fn(f64) -> f64,
    grid: &[f64],
    cfg: &RvConfig,
) -> Result<IndexEstimate> {
    let trace = representation_trace(f, f_prime, grid)?;
    let omegas: Vec<f64> = trace.iter().map(|p| p.1).collect();
    nrv_index_from_trace(grid, &omegas, cfg)
}

/// The three regimes of Karamata's integration theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KaramataMode {
    /// θ < -1: `∫_t^∞ s^θ L ~ t^{θ+1} L/(-θ-1)`.
    Tail,
    /// θ > -1: `∫_a^t s^θ L ~ t^{θ+1} L/(θ+1)`.
    Cumulative,
    /// θ = -1: `L/L̃ → 0` with `L̃` the tail or cumulative integral of `L/t`.
    Critical,
}

/// Ratio of the numerical integral to its Karamata asymptote along `grid`
/// (or `L/L̃` in the critical mode).
pub fn karamata_check(l: &CoefficientExpr, theta: f64, mode: KaramataMode, grid: &[f64], a: f64) -> Result<Vec<(f64, f64)>> {
    if abs(l.power) > 1e-12 {
        return Err(precondition("karamata_check expects a slowly varying L (power 0)"));
    }
    let ok = match mode {
        KaramataMode::Tail => theta < -1.0,
        KaramataMode::Cumulative => theta > -1.0,
        KaramataMode::Critical => abs(theta + 1.0) < 1e-12,
    };
    if !ok {
        return Err(precondition(format!("mode {mode:?} does not match theta = {theta}")));
    }
    if grid.is_empty() || grid[0] < a || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(precondition("grid must be increasing and start at or after a"));
    }
    let f = l.times_power(theta);
    let asymptote = |t: f64, c: f64| crate::math::powf(t, theta + 1.0) * l.eval(t) / c;
    match mode {
        KaramataMode::Tail => grid
            .iter()
            .map(|&t| Ok((t, tail_integral(&f, t, 1e-12)?.value / asymptote(t, -theta - 1.0))))
            .collect(),
        KaramataMode::Cumulative => {
            let cum = cumulative(&f, a, grid)?;
            Ok(grid.iter().zip(cum).map(|(&t, c)| (t, c / asymptote(t, theta + 1.0))).collect())
        }
        KaramataMode::Critical => {
            let v = classify_improper(&f, a)?;
            if v.is_convergent() {
                grid.iter().map(|&t| Ok((t, l.eval(t) / tail_integral(&f, t, 1e-12)?.value))).collect()
            } else {
                let cum = cumulative(&f, a, grid)?;
                Ok(grid.iter().zip(cum).map(|(&t, c)| (t, l.eval(t) / c)).collect())
            }
        }
    }
}

/// `∫_a^t f` at every grid point.
pub(crate) fn cumulative(f: &CoefficientExpr, a: f64, grid: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut lo = a;
    for &t in grid {
        if t > lo {
            acc += integrate(|s| f.eval(s), lo, t, 1e-13)?.value;
        }
        out.push(acc);
        lo = t;
    }
    Ok(out)
}

/// Outcome of a de Haan Π-class test.
#[derive(Debug, Clone, PartialEq)]
pub struct PiClassReport {
    pub holds: bool,
    pub auxiliary_samples: Vec<(f64, f64)>,
    pub lambda_grid: Vec<f64>,
    /// `max_λ |(f(λt) - f(t))/w(t) - ln λ|` along the grid.
    pub deviations: Vec<(f64, f64)>,
    /// Deviation at the last grid point.
    pub max_deviation: f64,
}

/// Default λ grid for [`pi_class_check`].
pub const DEFAULT_LAMBDAS: [f64; 3] = [0.5, 2.0, 4.0];

/// Test `(f(λt) - f(t))/w(t) → ln λ` across `grid` for each λ in `lambdas`.
pub fn pi_class_check(
    f: impl Fn(f64) -> f64,
    w: impl Fn(f64) -> f64,
    grid: &[f64],
    lambdas: &[f64],
    tolerance: f64,
) -> Result<PiClassReport> {
    if grid.len() < 2 || lambdas.is_empty() {
        return Err(precondition("pi_class_check needs at least two grid points and one lambda"));
    }
    let mut aux = Vec::with_capacity(grid.len());
    let mut devs = Vec::with_capacity(grid.len());
    for &t in grid {
        let wt = w(t);
        if !(wt > 0.0) {
            return Err(domain(format!("auxiliary function w({t}) = {wt} is not positive")));
        }
        let ft = f(t);
        let dev = lambdas
            .iter()
            .map(|&l| abs((f(l * t) - ft) / wt - ln(l)))
            .fold(0.0, f64::max);
        aux.push((t, wt));
        devs.push((t, dev));
    }
    let first = devs[0].1;
    let last = devs[devs.len() - 1].1;
    Ok(PiClassReport {
        holds: last < tolerance && last <= first + 1e-12,
        auxiliary_samples: aux,
        lambda_grid: lambdas.to_vec(),
        deviations: devs,
        max_deviation: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{exp, powf};

    fn sample(grid: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid.iter().map(|&t| f(t)).collect()
    }

    #[test]
    fn exact_power() {
        let g = default_grid();
        let e = estimate_rv_index(&g, &sample(&g, |t| powf(t, 1.5)), &RvConfig::default()).unwrap();
        assert!((e.index - 1.5).abs() < 0.01);
        assert!(matches!(e.verdict, RvVerdict::Rv(_)));
    }

    #[test]
    fn power_times_log() {
        let g = log_grid(1e3, 1e6, 60).unwrap();
        let e = estimate_rv_index(&g, &sample(&g, |t| t * t * ln(t)), &RvConfig::default()).unwrap();
        assert!(e.index >= 2.0 && e.index <= 2.15, "{e:?}");
        assert!(matches!(e.verdict, RvVerdict::Rv(_)));
    }

    #[test]
    fn gaussian_is_not_rv() {
        let g = log_grid(1e-2, 10.0, 60).unwrap();
        let lv: Vec<f64> = g.iter().map(|t| -t * t).collect();
        assert_eq!(estimate_rv_index_log(&g, &lv, &RvConfig::default()).unwrap().verdict, RvVerdict::NotRv);
        let e = nrv_index_from_logderivative(|t| exp(-t * t), |t| -2.0 * t * exp(-t * t), &g, &RvConfig::default()).unwrap();
        assert_eq!(e.verdict, RvVerdict::NotRv);
        let tr = representation_trace(|t| exp(-t * t), |t| -2.0 * t * exp(-t * t), &[10.0]).unwrap();
        assert!((tr[0].1 + 200.0).abs() < 1e-9);
    }

    #[test]
    fn slowly_varying_and_errors() {
        let g = default_grid();
        let e = estimate_rv_index(&g, &sample(&g, |t| ln(ln(t))), &RvConfig::default()).unwrap();
        assert_eq!(e.verdict, RvVerdict::Sv);
        assert!(estimate_rv_index(&g, &sample(&g, |t| t - 1e3), &RvConfig::default()).is_err());
        let short = log_grid(1e2, 1e4, 60).unwrap();
        assert!(estimate_rv_index(&short, &sample(&short, |t| t), &RvConfig::default()).is_err());
    }

    #[test]
    fn nrv_examples() {
        let g = default_grid();
        let e = nrv_index_from_logderivative(|t| t * t * t, |t| 3.0 * t * t, &g, &RvConfig::default()).unwrap();
        assert!((e.index - 3.0).abs() < 1e-12);
        let e = nrv_index_from_logderivative(|t| t * t * ln(t), |t| 2.0 * t * ln(t) + t, &g, &RvConfig::default()).unwrap();
        assert!(matches!(e.verdict, RvVerdict::Rv(_)));
        assert!((e.index - 2.0).abs() < 0.1);
        let tr = representation_trace(|t| t * t * ln(t) * ln(t), |t| 2.0 * t * ln(t) * ln(t) + 2.0 * t * ln(t), &g).unwrap();
        for (t, w) in tr {
            assert!((w - 2.0 - 2.0 / ln(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn karamata_examples() {
        let g = log_grid(1e3, 1e6, 10).unwrap();
        let one = CoefficientExpr::constant(1.0);
        for (_, r) in karamata_check(&one, -2.0, KaramataMode::Tail, &g, 1.0).unwrap() {
            assert!((r - 1.0).abs() < 1e-8);
        }
        let lnl = CoefficientExpr::constant(1.0).with_logs([1.0]);
        let tr = karamata_check(&lnl, 0.0, KaramataMode::Cumulative, &g, 1.0).unwrap();
        let (t, r) = tr[tr.len() - 1];
        assert!((r - (t * ln(t) - t + 1.0) / (t * ln(t))).abs() < 1e-10);
        assert!(1.0 - r < 0.073);
        let tr = karamata_check(&one, -1.0, KaramataMode::Critical, &g, 1.0).unwrap();
        for (t, r) in tr {
            assert!((r - 1.0 / ln(t)).abs() < 1e-10);
        }
        assert!(karamata_check(&one, 0.0, KaramataMode::Tail, &g, 1.0).is_err());
        assert!(karamata_check(&CoefficientExpr::new(1.0, 1.0), -2.0, KaramataMode::Tail, &g, 1.0).is_err());
    }

    #[test]
    fn pi_examples() {
        let g = log_grid(1e2, 1e4, 10).unwrap();
        let r = pi_class_check(ln, |_| 1.0, &g, &DEFAULT_LAMBDAS, 0.25).unwrap();
        assert!(r.holds && r.max_deviation < 1e-12);
        let r = pi_class_check(|t| ln(t) * ln(t), |t| 2.0 * ln(t), &g, &[2.0], 0.25).unwrap();
        assert!(r.holds);
        assert!((r.max_deviation - ln(2.0) * ln(2.0) / (2.0 * ln(1e4))).abs() < 1e-12);
        assert!((r.max_deviation - 0.026).abs() < 1e-3);
        let r = pi_class_check(|t| t, |_| 1.0, &g, &DEFAULT_LAMBDAS, 0.25).unwrap();
        assert!(!r.holds);
        assert!(pi_class_check(|t| t, |_| 0.0, &g, &DEFAULT_LAMBDAS, 0.25).is_err());
    }
}
