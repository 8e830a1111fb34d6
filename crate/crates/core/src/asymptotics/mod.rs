//! Theorem engines: hypothesis checks, class and formula prediction, and
//! trajectory-versus-formula comparison, plus the reciprocal and
//! change-of-variables transforms.
//!
//! Every limit statement is checked as a trend on a geometric grid; nothing here
//! claims a true limit.

mod general;
mod integrands;
mod necessity;
mod reciprocal;
mod rv;
mod support;
mod sv;
mod transform;

pub use general::{check_hypotheses_gen1, check_hypotheses_gen2, verify_gen1, verify_gen2};
pub use integrands::{g_integrand, h_tau_integrand, q_c_log, q_d_log};
pub use necessity::{check_necessity, riccati_residual, NecessityReport, RiccatiCheck, RICCATI_TOL};
pub use reciprocal::{reciprocal_trajectory, reciprocal_transform, IndexBookkeeping, ReciprocalEquation};
pub use rv::{check_hypotheses_rv, verify_rv};
pub use sv::{check_hypotheses_sv, verify_sv};
pub use transform::{change_of_variables, QuasiEquality, RHatCheck, TransformedEquation};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dde::{ClassLabel, SolutionClass};
use crate::rvkit::{IndexEstimate, PiClassReport};

/// Which theorem an engine implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Slowly varying increasing solutions, `δ > -1`.
    Sv,
    /// Regularly varying increasing solutions, `δ < -1`.
    Rv,
    /// Generalisation through `R_D` (divergent `∫ r^{1-β}`).
    Gen1,
    /// Generalisation through `Q = 1/R_C` (convergent `∫ r^{1-β}`).
    Gen2,
}

impl Theorem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Theorem::Sv => "sv",
            Theorem::Rv => "rv",
            Theorem::Gen1 => "gen1",
            Theorem::Gen2 => "gen2",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Asymptotic formula selected by an engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaId {
    F1,
    F2,
    F11,
    F21,
    TF11,
    TF22,
    TF1C,
    TF2C,
}

impl FormulaId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormulaId::F1 => "F1",
            FormulaId::F2 => "F2",
            FormulaId::F11 => "F11",
            FormulaId::F21 => "F21",
            FormulaId::TF11 => "TF11",
            FormulaId::TF22 => "TF22",
            FormulaId::TF1C => "TF1C",
            FormulaId::TF2C => "TF2C",
        }
    }

    /// Formulas whose comparison is a remainder ratio against a convergent tail integral.
    pub fn is_remainder(&self) -> bool {
        matches!(self, FormulaId::F2 | FormulaId::F21 | FormulaId::TF22 | FormulaId::TF2C)
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of a hypothesis checklist.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub required: String,
    /// The number the decision was based on (NaN when the check is purely structural).
    pub observed: f64,
    /// How the decision was reached.
    pub detail: String,
    pub pass: bool,
}

impl HypothesisCheck {
    pub(crate) fn new(name: &str, required: &str, observed: f64, detail: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), required: required.into(), observed, detail: detail.into(), pass }
    }
}

/// Outcome of checking one theorem's hypotheses on an equation, computed without any trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub theorem: Theorem,
    pub checks: Vec<HypothesisCheck>,
    /// AND of all checks.
    pub applicable: bool,
    pub predicted_class: ClassLabel,
    /// ϑ of the predicted normalized regular variation (0 for slow variation).
    pub predicted_index: f64,
    pub formula_id: Option<FormulaId>,
}

impl HypothesisReport {
    pub(crate) fn new(
        theorem: Theorem,
        checks: Vec<HypothesisCheck>,
        predicted_class: ClassLabel,
        predicted_index: f64,
        formula_id: Option<FormulaId>,
    ) -> Self {
        let applicable = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self { theorem, checks, applicable, predicted_class, predicted_index, formula_id }
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Extrapolated limits attached to a fit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimitConstants {
    /// `lim y`.
    pub n: Option<f64>,
    /// `lim y^{[1]}`.
    pub m: Option<f64>,
    /// Additive constant of the integrated formulas.
    pub a: Option<f64>,
}

/// A named sampled trace `(t, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Trace {
    pub(crate) fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points }
    }

    pub fn last(&self) -> Option<f64> {
        self.points.last().map(|p| p.1)
    }
}

/// Comparison of a trajectory against the predicted asymptotic formula.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub theorem: Theorem,
    pub formula_id: FormulaId,
    pub comparison_metric: String,
    /// The formula ratio; it should tend to 1.
    pub trace: Vec<(f64, f64)>,
    pub final_ratio: f64,
    pub limit_constants: LimitConstants,
    pub observed: SolutionClass,
    /// Index verdict on `y` (or on `y` composed with the inverse change of variable).
    pub index: Option<IndexEstimate>,
    /// Target of the index verdict.
    pub index_target: f64,
    pub pi_check: Option<PiClassReport>,
    /// Smallness traces that should decrease to 0.
    pub smallness: Vec<Trace>,
    /// Relative spread of the limit extrapolation between the last two windows.
    pub limit_spread: Option<f64>,
}

/// Thresholds shared by all engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Upper end of the coefficient grids used for trend checks.
    pub horizon: f64,
    /// A vanishing trend must end below this value.
    pub trend_threshold: f64,
    /// Relative tolerance for index comparisons.
    pub index_tolerance: f64,
    /// Final-deviation tolerance for Π-class checks.
    pub pi_tolerance: f64,
    /// Relative tolerance for tail and cumulative integrals.
    pub quad_tol: f64,
    /// Trace points per decade.
    pub per_decade: usize,
    /// Fraction of the logarithmic time span kept after burn-in.
    pub tail_fraction: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            horizon: 1e6,
            trend_threshold: 0.02,
            index_tolerance: 0.05,
            pi_tolerance: 0.25,
            quad_tol: 1e-10,
            per_decade: 10,
            tail_fraction: crate::dde::DEFAULT_TAIL_FRACTION,
        }
    }
}
