//! Acceptance suite: one line per criterion, tolerances pinned here.
//!
//! Each criterion runs its bundled scenario. The scenario files carry the same
//! thresholds, and this target refuses to run if a file drifts from the pins.

use std::collections::BTreeMap;
use std::time::Duration;

use hlde::config::{bundled_by_name, CheckKind};
use hlde::{run, RunReport};

struct Criterion {
    id: u32,
    title: &'static str,
    scenario: &'static str,
    check: CheckKind,
    pins: &'static [(&'static str, f64)],
    /// Metrics that must be present (by name prefix), so a silent skip cannot pass.
    required: &'static [&'static str],
}

const CRITERIA: [Criterion; 11] = [
    Criterion {
        id: 1,
        title: "manufactured t^2 on the 3x3 (alpha, lambda) grid: error <= 1e-5, order >= 3",
        scenario: "c01_manufactured_grid",
        check: CheckKind::ManufacturedGrid,
        pins: &[("rel_error", 1e-5), ("order_ratio", 8.0), ("roundoff_floor", 1e-12), ("coarse_step", 0.1)],
        required: &["error[", "order[", "order_fractional["],
    },
    Criterion {
        id: 2,
        title: "counterexample e^{-t^2}: residual, class D, NotRV, t y'/y = -200",
        scenario: "c02_counterexample",
        check: CheckKind::Counterexample,
        pins: &[("residual", 1e-6), ("stencil_step", 1e-3), ("classify_t_end", 4.0), ("omega_rel", 0.01)],
        required: &["residual", "class_D", "rvkit_not_rv", "omega_at_10"],
    },
    Criterion {
        id: 3,
        title: "bounded slowly varying solution: I_{B,inf}, SV index, remainder ratio, LLN",
        scenario: "c03_sv_bounded",
        check: CheckKind::Verify,
        pins: &[("ratio", 0.3), ("index", 0.05), ("trend", 0.0), ("smallness", 0.0)],
        required: &["applicable", "class", "expected_class", "ratio", "trend", "index", "smallness_LLN"],
    },
    Criterion {
        id: 4,
        title: "index-2 solution: rho = 2, index within 5%, Pi-check, I_{inf,B}, M stable to 1%",
        scenario: "c04_rv_quadratic",
        check: CheckKind::Verify,
        pins: &[("index", 0.05), ("limit_spread", 0.01), ("pi", 0.0)],
        required: &["applicable", "class", "expected_class", "expected_index", "index", "limit_spread", "pi"],
    },
    Criterion {
        id: 5,
        title: "Karamata suite: 12 cases within 8% at 1e6, monotone; exact cases to 1e-8",
        scenario: "c05_karamata",
        check: CheckKind::Karamata,
        pins: &[("ratio", 0.08), ("exact", 1e-8)],
        required: &["tail(", "cumulative(", "critical(", "exact_tail", "exact_cumulative"],
    },
    Criterion {
        id: 6,
        title: "improper integrals: 12-case Bertrand table plus int G, int H_tau of scenarios 3 and 4",
        scenario: "c06_integral_table",
        check: CheckKind::IntegralTable,
        pins: &[("agreement", 1.0), ("value", 1e-6)],
        required: &["verdict[t^", "verdict[int G (sv)]", "verdict[int H_tau (sv)]", "verdict[int G (rv)]", "verdict[int H_tau (rv)]", "agreement"],
    },
    Criterion {
        id: 7,
        title: "reciprocal equation on scenarios 1 and 4: residual < 10x solver tol, delta bookkeeping",
        scenario: "c07_reciprocal",
        check: CheckKind::Reciprocal,
        pins: &[("residual_factor", 10.0), ("index", 0.05)],
        required: &["residual[manufactured]", "residual[scenario]", "p_tilde_index[manufactured]", "p_tilde_index[scenario]"],
    },
    Criterion {
        id: 8,
        title: "change of variables: r_hat = 1 (divergent), r_hat = s^2 (convergent), quasiderivatives agree",
        scenario: "c08_change_of_variables",
        check: CheckKind::ChangeOfVariables,
        pins: &[("r_hat_divergent", 1e-8), ("r_hat_convergent", 1e-6), ("quasi_factor", 1.0)],
        required: &["r_hat[divergent]", "r_hat[convergent]", "quasi[divergent]", "quasi[convergent]"],
    },
    Criterion {
        id: 9,
        title: "cross-engine: gen2 vs sv on scenario 3, gen1 vs rv on scenario 4, constants within 1%",
        scenario: "c09_cross_engine",
        check: CheckKind::CrossEngine,
        pins: &[("constant", 0.01)],
        required: &["class[gen2_vs_sv]", "N[gen2_vs_sv]", "class[gen1_vs_rv]", "M[gen1_vs_rv]"],
    },
    Criterion {
        id: 10,
        title: "critical case delta = -1: gen1 applicable, int q_D flips between omega 0.5 and 2",
        scenario: "c10_critical_case",
        check: CheckKind::CriticalCase,
        pins: &[("omega_divergent", 0.5), ("omega_convergent", 2.0)],
        required: &["gen1_applicable[omega=0.5]", "gen1_applicable[omega=2]", "int_q_D[omega=0.5]", "int_q_D[omega=2]"],
    },
    Criterion {
        id: 11,
        title: "non-RV coefficients: p_D index within 5% of -alpha, L_{p_D} decreasing",
        scenario: "c11_non_rv",
        check: CheckKind::NonRv,
        pins: &[("index", 0.05)],
        required: &["p_D_index", "L_p_D_decreasing"],
    },
];

/// Per-scenario wall-clock budget.
const TIME_BUDGET: Duration = Duration::from_secs(30);

fn summary(rep: &RunReport) -> String {
    let fails: Vec<String> = rep.failing().iter().map(|m| format!("{} ({})", m.name, m.detail)).collect();
    if fails.is_empty() {
        format!("{} metrics", rep.metrics.len())
    } else {
        format!("failing: {}", fails.join("; "))
    }
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    let mut total = Duration::ZERO;
    for c in &CRITERIA {
        let sc = bundled_by_name(c.scenario).unwrap_or_else(|| panic!("bundled scenario {} missing", c.scenario));
        assert_eq!(sc.check, c.check, "criterion {}: scenario drives the wrong check", c.id);
        let pins: BTreeMap<String, f64> = c.pins.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        assert_eq!(sc.tolerances, pins, "criterion {}: scenario tolerances drifted from the pinned values", c.id);
        let rep = run(&sc);
        total += rep.timing;
        let missing: Vec<&str> = c.required.iter().copied().filter(|p| !rep.metrics.iter().any(|m| m.name.starts_with(p))).collect();
        let in_time = rep.timing < TIME_BUDGET;
        let pass = rep.pass() && missing.is_empty() && in_time;
        let mut line = format!("criterion {:>2} {}: {} [{}]", c.id, if pass { "PASS" } else { "FAIL" }, c.title, summary(&rep));
        if !missing.is_empty() {
            line.push_str(&format!(" missing metrics: {missing:?}"));
        }
        if !in_time {
            line.push_str(&format!(" over budget: {:.1?}", rep.timing));
        }
        println!("{line}");
        if !pass {
            failed.push(c.id);
        }
    }
    println!("acceptance: {}/{} criteria pass, total {:.1?}", CRITERIA.len() - failed.len(), CRITERIA.len(), total);
    assert!(total < Duration::from_secs(300), "suite over the 5 minute budget");
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
