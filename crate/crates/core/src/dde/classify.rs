//! Classification of a computed trajectory into the increasing subclasses and `D`.

use alloc::vec::Vec;
use core::fmt;

use super::trajectory::Trajectory;
use crate::error::{precondition, Result};
use crate::extrapolate::levin_u;
use crate::math::{abs, ln, ls_slope, powf};

/// Fraction of the (logarithmic) time span kept after burn-in.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.8;

const SAMPLES_PER_DECADE: f64 = 8.0;
const MIN_TAIL_DECADES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitKind {
    Finite(f64),
    Infinite,
    Undetermined,
}

impl LimitKind {
    pub fn is_finite(&self) -> bool {
        matches!(self, LimitKind::Finite(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    IBB,
    IBInf,
    IInfB,
    IInfInf,
    D,
    Undetermined,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 6] =
        [ClassLabel::IBB, ClassLabel::IBInf, ClassLabel::IInfB, ClassLabel::IInfInf, ClassLabel::D, ClassLabel::Undetermined];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::IBB => "I_{B,B}",
            ClassLabel::IBInf => "I_{B,inf}",
            ClassLabel::IInfB => "I_{inf,B}",
            ClassLabel::IInfInf => "I_{inf,inf}",
            ClassLabel::D => "D",
            ClassLabel::Undetermined => "Undetermined",
        }
    }

    /// Label of an increasing solution with the given limit behaviour.
    pub fn increasing(y_finite: bool, quasi_finite: bool) -> Self {
        match (y_finite, quasi_finite) {
            (true, true) => ClassLabel::IBB,
            (true, false) => ClassLabel::IBInf,
            (false, true) => ClassLabel::IInfB,
            (false, false) => ClassLabel::IInfInf,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm: alloc::string::String =
            s.chars().filter(|c| !matches!(c, '{' | '}' | '_' | ',' | ' ')).collect::<alloc::string::String>().to_lowercase();
        match norm.replace('∞', "inf").as_str() {
            "ibb" => Some(ClassLabel::IBB),
            "ibinf" => Some(ClassLabel::IBInf),
            "iinfb" => Some(ClassLabel::IInfB),
            "iinfinf" => Some(ClassLabel::IInfInf),
            "d" => Some(ClassLabel::D),
            "undetermined" => Some(ClassLabel::Undetermined),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionClass {
    pub monotonicity: Monotonicity,
    pub y_limit: LimitKind,
    pub quasi_limit: LimitKind,
    pub label: ClassLabel,
}

impl SolutionClass {
    fn from_parts(monotonicity: Monotonicity, y_limit: LimitKind, quasi_limit: LimitKind) -> Self {
        let label = match monotonicity {
            Monotonicity::Decreasing => ClassLabel::D,
            Monotonicity::Undetermined => ClassLabel::Undetermined,
            Monotonicity::Increasing => match (y_limit, quasi_limit) {
                (LimitKind::Undetermined, _) | (_, LimitKind::Undetermined) => ClassLabel::Undetermined,
                (y, u) => ClassLabel::increasing(y.is_finite(), u.is_finite()),
            },
        };
        Self { monotonicity, y_limit, quasi_limit, label }
    }
}

/// Monotone Cauchy test on samples `(t_k, v_k)` from a geometric grid.
///
/// Window increments decaying faster than `1/ln t` (summable over a geometric grid)
/// mean a finite limit, slower decay or growth means an infinite one.
fn limit_of(ts: &[f64], vs: &[f64]) -> LimitKind {
    let n = vs.len();
    if n < 6 || vs.iter().any(|v| !v.is_finite()) {
        return LimitKind::Undetermined;
    }
    let incs: Vec<f64> = vs.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = vs.iter().fold(0.0_f64, |m, v| m.max(abs(*v)));
    let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
    if incs.iter().all(|d| abs(*d) <= tiny) {
        return LimitKind::Finite(vs[n - 1]);
    }
    let sign = if incs[incs.len() - 1] > 0.0 { 1.0 } else { -1.0 };
    if incs.iter().any(|d| d * sign < -tiny) {
        return LimitKind::Undetermined;
    }
    // Increments at the roundoff floor carry no information.
    let pts: Vec<(f64, f64)> =
        ts[1..].iter().zip(&incs).filter(|(_, d)| abs(**d) > tiny).map(|(t, d)| (*t, ln(abs(*d)))).collect();
    if pts.len() < 4 {
        return LimitKind::Finite(vs[n - 1]);
    }
    let (slope, lo, hi) = if ts[0] > core::f64::consts::E {
        let xs: Vec<f64> = pts.iter().map(|(t, _)| ln(ln(*t))).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, d)| *d).collect();
        (ls_slope(&xs, &ys).0, -1.3, -0.7)
    } else {
        let xs: Vec<f64> = pts.iter().map(|(t, _)| ln(*t)).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, d)| *d).collect();
        (ls_slope(&xs, &ys).0, -0.5, -0.05)
    };
    if slope > hi {
        LimitKind::Infinite
    } else if slope < lo {
        let value = levin_u(vs, 3).ok().filter(|v| v.is_finite()).unwrap_or(vs[n - 1]);
        LimitKind::Finite(value)
    } else {
        LimitKind::Undetermined
    }
}

/// Classify `traj` using the last `tail_fraction` of its logarithmic time span.
pub fn classify_trajectory(traj: &Trajectory, tail_fraction: f64) -> Result<SolutionClass> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(precondition("tail fraction must lie in (0, 1]"));
    }
    let (t0, t_n) = (traj.t_start(), traj.t_end());
    if !(t0 > 0.0) || traj.ts.len() < 2 {
        return Err(precondition("trajectory needs a positive start and at least two nodes"));
    }
    let tail_start = t0 * powf(t_n / t0, 1.0 - tail_fraction);
    let first = traj.ts.partition_point(|&t| t < tail_start);
    let yps = &traj.y_primes[first..];
    let monotonicity = if yps.iter().all(|&d| d > 0.0) {
        Monotonicity::Increasing
    } else if yps.iter().all(|&d| d < 0.0) {
        Monotonicity::Decreasing
    } else {
        Monotonicity::Undetermined
    };
    let decades = ln(t_n / tail_start) / core::f64::consts::LN_10;
    if decades < MIN_TAIL_DECADES {
        return Ok(SolutionClass::from_parts(monotonicity, LimitKind::Undetermined, LimitKind::Undetermined));
    }
    let m = crate::math::floor(decades * SAMPLES_PER_DECADE + 0.5) as usize + 1;
    let ts: Vec<f64> = (0..m).map(|k| tail_start * powf(t_n / tail_start, k as f64 / (m - 1) as f64)).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| traj.y_at(t).unwrap_or(f64::NAN)).collect();
    let us: Vec<f64> = ts.iter().map(|&t| traj.quasi_at(t).unwrap_or(f64::NAN)).collect();
    Ok(SolutionClass::from_parts(monotonicity, limit_of(&ts, &ys), limit_of(&ts, &us)))
}
