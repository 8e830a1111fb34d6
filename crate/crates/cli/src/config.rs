//! JSON scenario schema and its conversion into library types.
//!
//! A scenario is one JSON document. Coefficients are structured objects
//! `{scale, power, log_powers, exp_rate, factor_terms}`; arbitrary closures are
//! not expressible here.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use hlde_core::dde::{ClassLabel, HistorySpec, SolverOptions};
use hlde_core::model::CustomFactor;
use hlde_core::{CoefficientExpr, DelayMap, HalfLinearEquation};
use serde::{Deserialize, Serialize};

/// Config failure with a field path and, for syntax errors, a line and column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.path.is_empty() || self.path == "." { String::new() } else { format!(" at `{}`", self.path) };
        if self.line > 0 {
            write!(f, "config error{at} (line {}, column {}): {}", self.line, self.column, self.message)
        } else {
            write!(f, "config error{at}: {}", self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn field(path: &str, message: impl Into<String>) -> Self {
        Self { path: path.into(), line: 0, column: 0, message: message.into() }
    }
}

/// `e^{γt} t^ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpRateSpec {
    pub gamma: f64,
    #[serde(default)]
    pub omega: f64,
}

/// One term `scale · t^power` of a polynomial-like factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub scale: f64,
    #[serde(default)]
    pub power: f64,
}

/// `scale · t^power · Π ln_k^{e_k} t · e^{γt} t^ω · Σ_j c_j t^{k_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub power: f64,
    #[serde(default)]
    pub log_powers: Vec<f64>,
    #[serde(default)]
    pub exp_rate: Option<ExpRateSpec>,
    /// Optional sum factor; it must stay positive on the domain.
    #[serde(default)]
    pub factor_terms: Vec<PowerTerm>,
}

fn one() -> f64 {
    1.0
}

impl CoefficientSpec {
    pub fn to_expr(&self) -> CoefficientExpr {
        let mut c = CoefficientExpr::new(self.scale, self.power);
        if !self.log_powers.is_empty() {
            c = c.with_logs(self.log_powers.clone());
        }
        if let Some(e) = self.exp_rate {
            c = c.with_exp(e.gamma, e.omega);
        }
        if !self.factor_terms.is_empty() {
            let terms = self.factor_terms.clone();
            let dterms = terms.clone();
            let label = terms.iter().map(|t| format!("{}t^{}", t.scale, t.power)).collect::<Vec<_>>().join("+");
            c = c.with_custom(CustomFactor::new(
                label,
                move |t| terms.iter().map(|p| p.scale * t.powf(p.power)).sum(),
                move |t| dterms.iter().map(|p| p.scale * p.power * t.powf(p.power - 1.0)).sum(),
            ));
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    /// `τ(t) = t - σ`.
    Shift(f64),
    /// `τ(t) = λt`.
    Proportional(f64),
    /// `τ(t) = t`.
    Identity,
}

impl DelaySpec {
    pub fn to_map(self) -> hlde_core::Result<DelayMap> {
        match self {
            DelaySpec::Shift(s) => DelayMap::shift(s),
            DelaySpec::Proportional(l) => DelayMap::proportional(l),
            DelaySpec::Identity => Ok(DelayMap::Proportional(1.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub alpha: f64,
    pub r: CoefficientSpec,
    pub p: CoefficientSpec,
    pub tau: DelaySpec,
    /// Start of the domain.
    pub a: f64,
}

impl EquationSpec {
    pub fn build(&self) -> Result<HalfLinearEquation, ConfigError> {
        let tau = self.tau.to_map().map_err(|e| ConfigError::field("equation.tau", e.to_string()))?;
        HalfLinearEquation::new(self.alpha, self.r.to_expr(), self.p.to_expr(), tau, self.a)
            .map_err(|e| ConfigError::field("equation", e.to_string()))
    }
}

/// Initial function on `[τ(a), a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HistoryKind {
    /// `c t^k`.
    Power { scale: f64, power: f64 },
    /// `exp(c0 + c1 t + c2 t²)`.
    ExpQuadratic([f64; 3]),
}

impl HistoryKind {
    pub fn build(&self) -> HistorySpec {
        match *self {
            HistoryKind::Power { scale, power } => HistorySpec::power(scale, power),
            HistoryKind::ExpQuadratic([c0, c1, c2]) => HistorySpec::new(
                move |t| (c0 + c1 * t + c2 * t * t).exp(),
                move |t| (c1 + 2.0 * c2 * t) * (c0 + c1 * t + c2 * t * t).exp(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_step")]
    pub step: f64,
    /// Per-step tolerance; absent means fixed steps.
    #[serde(default = "default_tol")]
    pub tol: Option<f64>,
}

fn default_step() -> f64 {
    SolverOptions::default().step
}

fn default_tol() -> Option<f64> {
    SolverOptions::default().tol
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { step: default_step(), tol: default_tol() }
    }
}

impl SolverSpec {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { step: self.step, tol: self.tol, ..SolverOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Auto,
    Sv,
    Rv,
    Gen1,
    Gen2,
}

impl EngineChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Self::Auto),
            "sv" => Some(Self::Sv),
            "rv" => Some(Self::Rv),
            "gen1" => Some(Self::Gen1),
            "gen2" => Some(Self::Gen2),
            _ => None,
        }
    }
}

/// Which acceptance check a scenario drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Solve, classify, check hypotheses and compare with the predicted formula.
    Verify,
    ManufacturedGrid,
    Counterexample,
    Karamata,
    IntegralTable,
    Reciprocal,
    ChangeOfVariables,
    CrossEngine,
    CriticalCase,
    NonRv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub check: CheckKind,
    pub equation: EquationSpec,
    pub history: HistoryKind,
    pub t_end: f64,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default = "auto")]
    pub engine: EngineChoice,
    #[serde(default)]
    pub expect: Expectation,
    /// Named thresholds; each present key enables the matching metric.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

/// Values fixed by hand, independent of any engine.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// Class label such as `I_{B,inf}`.
    #[serde(default)]
    pub class: Option<String>,
    /// Predicted regular-variation index of `y`.
    #[serde(default)]
    pub index: Option<f64>,
}

fn auto() -> EngineChoice {
    EngineChoice::Auto
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| LoadError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ConfigError::field("name", "must be non-empty and use only [A-Za-z0-9_-]"));
        }
        if !(self.t_end.is_finite() && self.t_end > self.equation.a) {
            return Err(ConfigError::field("t_end", format!("must exceed a = {}", self.equation.a)));
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(ConfigError::field(&format!("tolerances.{k}"), "must be a finite non-negative number"));
            }
        }
        if let Some(c) = &self.expect.class {
            if ClassLabel::parse(c).is_none() {
                return Err(ConfigError::field("expect.class", format!("unknown class label `{c}`")));
            }
        }
        self.equation.build()?;
        Ok(())
    }

    pub fn tol(&self, key: &str) -> Option<f64> {
        self.tolerances.get(key).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Failure to load a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadError {
    Io(String),
    Config(String),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(m) | LoadError::Config(m) => f.write_str(m),
        }
    }
}

/// Scenarios shipped with the binary, in name order.
pub fn bundled() -> Vec<Scenario> {
    let mut v: Vec<Scenario> = BUNDLED
        .iter()
        .map(|(file, text)| Scenario::from_json(text).unwrap_or_else(|e| panic!("bundled scenario {file}: {e}")))
        .collect();
    v.sort_by(|a, b| a.name.cmp(&b.name));
    v
}

pub fn bundled_by_name(name: &str) -> Option<Scenario> {
    bundled().into_iter().find(|s| s.name == name)
}

const BUNDLED: [(&str, &str); 11] = [
    ("c01_manufactured_grid.json", include_str!("../scenarios/c01_manufactured_grid.json")),
    ("c02_counterexample.json", include_str!("../scenarios/c02_counterexample.json")),
    ("c03_sv_bounded.json", include_str!("../scenarios/c03_sv_bounded.json")),
    ("c04_rv_quadratic.json", include_str!("../scenarios/c04_rv_quadratic.json")),
    ("c05_karamata.json", include_str!("../scenarios/c05_karamata.json")),
    ("c06_integral_table.json", include_str!("../scenarios/c06_integral_table.json")),
    ("c07_reciprocal.json", include_str!("../scenarios/c07_reciprocal.json")),
    ("c08_change_of_variables.json", include_str!("../scenarios/c08_change_of_variables.json")),
    ("c09_cross_engine.json", include_str!("../scenarios/c09_cross_engine.json")),
    ("c10_critical_case.json", include_str!("../scenarios/c10_critical_case.json")),
    ("c11_non_rv.json", include_str!("../scenarios/c11_non_rv.json")),
];
