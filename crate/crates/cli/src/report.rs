//! Run reports and their deterministic text renderings.
//!
//! Data columns use 17 significant digits, summaries 6. Timing is kept on the
//! report but never written, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::time::Duration;

use hlde_core::asymptotics::{AsymptoticFit, HypothesisReport, Theorem};
use hlde_core::dde::{ClassLabel, LimitKind, SolutionClass, Trajectory};

use crate::config::CheckKind;

/// 17 significant digits.
pub fn data(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        nonfinite(x)
    }
}

/// 6 significant digits.
pub fn summary(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.5e}")
    } else {
        nonfinite(x)
    }
}

fn nonfinite(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON number with 17 significant digits, `null` when not finite.
fn json_num(x: f64) -> String {
    if x.is_finite() {
        data(x)
    } else {
        "null".into()
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
    /// A yes/no property; `observed` is 1 or 0.
    Holds,
}

impl Relation {
    fn symbol(&self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Holds => "holds",
        }
    }
}

/// One thresholded acceptance metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub observed: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl Metric {
    pub fn at_most(name: impl Into<String>, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        let pass = observed <= threshold;
        Self { name: name.into(), observed, relation: Relation::AtMost, threshold, pass, detail: detail.into() }
    }

    pub fn at_least(name: impl Into<String>, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        let pass = observed >= threshold;
        Self { name: name.into(), observed, relation: Relation::AtLeast, threshold, pass, detail: detail.into() }
    }

    pub fn holds(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        let observed = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), observed, relation: Relation::Holds, threshold: 1.0, pass: ok, detail: detail.into() }
    }

    fn threshold_text(&self) -> String {
        match self.relation {
            Relation::Holds => "holds".into(),
            r => format!("{} {}", r.symbol(), summary(self.threshold)),
        }
    }

    fn observed_text(&self) -> String {
        match self.relation {
            Relation::Holds => (if self.pass { "yes" } else { "no" }).into(),
            _ => summary(self.observed),
        }
    }
}

/// Everything a scenario run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub check: CheckKind,
    pub engine: Option<Theorem>,
    pub hypotheses: Vec<HypothesisReport>,
    pub predicted: Option<ClassLabel>,
    pub observed: Option<SolutionClass>,
    pub fits: Vec<AsymptoticFit>,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
    pub timing: Duration,
}

impl RunReport {
    pub fn new(scenario: &str, check: CheckKind) -> Self {
        Self {
            scenario: scenario.into(),
            check,
            engine: None,
            hypotheses: Vec::new(),
            predicted: None,
            observed: None,
            fits: Vec::new(),
            metrics: Vec::new(),
            notes: Vec::new(),
            timing: Duration::ZERO,
        }
    }

    /// Predicted class equals the observed one (when both exist) and every metric passes.
    pub fn pass(&self) -> bool {
        let class_ok = match (self.predicted, self.observed) {
            (Some(p), Some(o)) => p == o.label,
            _ => true,
        };
        class_ok && !self.metrics.is_empty() && self.metrics.iter().all(|m| m.pass)
    }

    pub fn failing(&self) -> Vec<&Metric> {
        self.metrics.iter().filter(|m| !m.pass).collect()
    }

    pub fn push(&mut self, m: Metric) {
        self.metrics.push(m);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// One-line verdict.
    pub fn headline(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let fails: Vec<String> = self.failing().iter().map(|m| m.name.clone()).collect();
        if fails.is_empty() {
            format!("{status} {} ({} metrics)", self.scenario, self.metrics.len())
        } else {
            format!("{status} {} (failing: {})", self.scenario, fails.join(", "))
        }
    }
}

fn limit_text(l: LimitKind) -> String {
    match l {
        LimitKind::Finite(v) => format!("finite ({})", summary(v)),
        LimitKind::Infinite => "infinite".into(),
        LimitKind::Undetermined => "undetermined".into(),
    }
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

pub fn markdown(rep: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n", rep.scenario);
    let _ = writeln!(s, "- check: {:?}", rep.check);
    if let Some(e) = rep.engine {
        let _ = writeln!(s, "- engine: {e}");
    }
    if let Some(p) = rep.predicted {
        let _ = writeln!(s, "- predicted class: {p}");
    }
    if let Some(o) = rep.observed {
        let _ = writeln!(s, "- observed class: {} (monotonicity {:?}, y {}, quasi {})", o.label, o.monotonicity, limit_text(o.y_limit), limit_text(o.quasi_limit));
    }
    let _ = writeln!(s, "- result: {}", if rep.pass() { "pass" } else { "fail" });
    for h in &rep.hypotheses {
        let _ = writeln!(s, "\n## Hypotheses: {} (applicable: {})\n", h.theorem, if h.applicable { "yes" } else { "no" });
        let _ = writeln!(s, "| check | required | observed | detail | pass |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for c in &h.checks {
            let _ = writeln!(s, "| {} | {} | {} | {} | {} |", cell(&c.name), cell(&c.required), summary(c.observed), cell(&c.detail), if c.pass { "yes" } else { "no" });
        }
    }
    if !rep.fits.is_empty() {
        let _ = writeln!(s, "\n## Fits\n");
        let _ = writeln!(s, "| engine | formula | metric | final ratio | N | M | index | target |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
        for f in &rep.fits {
            let opt = |v: Option<f64>| v.map(summary).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                f.theorem,
                f.formula_id,
                cell(&f.comparison_metric),
                summary(f.final_ratio),
                opt(f.limit_constants.n),
                opt(f.limit_constants.m),
                opt(f.index.as_ref().map(|i| i.index)),
                summary(f.index_target)
            );
        }
    }
    let _ = writeln!(s, "\n## Metrics\n");
    let _ = writeln!(s, "| metric | observed | threshold | pass | detail |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for m in &rep.metrics {
        let _ = writeln!(s, "| {} | {} | {} | {} | {} |", cell(&m.name), m.observed_text(), m.threshold_text(), if m.pass { "yes" } else { "no" }, cell(&m.detail));
    }
    if !rep.notes.is_empty() {
        let _ = writeln!(s, "\n## Notes\n");
        for n in &rep.notes {
            let _ = writeln!(s, "- {n}");
        }
    }
    s
}

pub const METRICS_CSV_HEADER: &str = "scenario,metric,observed,relation,threshold,pass";

pub fn metrics_csv(rep: &RunReport, header: bool) -> String {
    let mut s = String::new();
    if header {
        let _ = writeln!(s, "{METRICS_CSV_HEADER}");
    }
    for m in &rep.metrics {
        let _ = writeln!(s, "{},{},{},{},{},{}", rep.scenario, m.name.replace(',', ";"), summary(m.observed), m.relation.symbol(), summary(m.threshold), m.pass);
    }
    s
}

/// One object per `(t, ratio)` trace point of every fit, then one per metric.
pub fn jsonl(rep: &RunReport) -> String {
    let mut s = String::new();
    let name = json_str(&rep.scenario);
    for f in &rep.fits {
        let (eng, form) = (json_str(f.theorem.as_str()), json_str(f.formula_id.as_str()));
        for &(t, r) in &f.trace {
            let _ = writeln!(s, "{{\"scenario\":{name},\"engine\":{eng},\"formula\":{form},\"t\":{},\"ratio\":{}}}", json_num(t), json_num(r));
        }
    }
    for m in &rep.metrics {
        let _ = writeln!(
            s,
            "{{\"scenario\":{name},\"metric\":{},\"observed\":{},\"relation\":{},\"threshold\":{},\"pass\":{}}}",
            json_str(&m.name),
            json_num(m.observed),
            json_str(m.relation.symbol()),
            json_num(m.threshold),
            m.pass
        );
    }
    s
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,y,y_prime,quasi";

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut s = String::with_capacity(tr.ts.len() * 96);
    let _ = writeln!(s, "{TRAJECTORY_CSV_HEADER}");
    for i in 0..tr.ts.len() {
        let _ = writeln!(s, "{},{},{},{}", data(tr.ts[i]), data(tr.ys[i]), data(tr.y_primes[i]), data(tr.quasis[i]));
    }
    s
}

pub fn trajectory_jsonl(tr: &Trajectory) -> String {
    let mut s = String::with_capacity(tr.ts.len() * 120);
    for i in 0..tr.ts.len() {
        let _ = writeln!(
            s,
            "{{\"t\":{},\"y\":{},\"y_prime\":{},\"quasi\":{}}}",
            json_num(tr.ts[i]),
            json_num(tr.ys[i]),
            json_num(tr.y_primes[i]),
            json_num(tr.quasis[i])
        );
    }
    s
}

/// Aggregate table for a suite run; reports must already be sorted by name.
pub fn suite_markdown(reports: &[RunReport]) -> String {
    let mut s = String::from("# Suite\n\n| scenario | check | result | failing metrics |\n|---|---|---|---|\n");
    for r in reports {
        let fails: Vec<&str> = r.failing().iter().map(|m| m.name.as_str()).collect();
        let _ = writeln!(s, "| {} | {:?} | {} | {} |", r.scenario, r.check, if r.pass() { "pass" } else { "fail" }, cell(&fails.join(", ")));
    }
    let passed = reports.iter().filter(|r| r.pass()).count();
    let _ = writeln!(s, "\n{passed}/{} scenarios pass", reports.len());
    s
}

pub fn suite_csv(reports: &[RunReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{METRICS_CSV_HEADER}");
    for r in reports {
        s.push_str(&metrics_csv(r, false));
    }
    s
}

pub fn suite_jsonl(reports: &[RunReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(s, "{{\"scenario\":{},\"pass\":{},\"metrics\":{}}}", json_str(&r.scenario), r.pass(), r.metrics.len());
    }
    s
}
