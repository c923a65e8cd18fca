//! Registry of bundled examples, each rerun end to end with pinned
//! parameters and checked against its expected verdict.

use std::fmt::Write as _;

use chinese_auction::continuous::{
    best_response_dynamics, interior_start, symmetric_equilibrium_costly, symmetric_equilibrium_given, DynamicsConfig,
};
use chinese_auction::discrete::{
    arrival_cascade_traced, equivalent_assignments, exhaustive_equilibrium_search, greedy_symmetric_players,
    strategy_count, two_item_asymmetric,
};
use chinese_auction::model::expected_utility_discrete;
use chinese_auction::verify::{epsilon_nash_check_continuous, exact_nash_check_discrete, nonexistence_grid_audit, AuditConfig};
use chinese_auction::{AuctionInstance, ContinuousProfile, DiscreteAssignment, Exact, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{exit, Outcome, ReproArgs};

const CLOSED_FORM_EPSILON: f64 = 1e-9;
const DYNAMICS_EPSILON: f64 = 1e-8;
const AUDIT_STEP: f64 = 0.01;
const AUDIT_DEVIATION_STEP: f64 = 0.001;

type Check = fn() -> Result<Verdict>;

/// What an example found.
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
    pub data: Value,
}

pub struct Example {
    pub name: &'static str,
    pub claim: &'static str,
    run: Check,
}

pub const REGISTRY: &[Example] = &[
    Example { name: "thm32", claim: "common valuations, given budgets: x_ij = w_i v_j / sum v is an equilibrium", run: thm32 },
    Example { name: "cor33", claim: "common valuations, equal budgets: x_ij = v_j / sum v is an equilibrium", run: cor33 },
    Example { name: "prop35", claim: "a zero valuation can rule out pure equilibria under given budgets", run: prop35 },
    Example { name: "thm36", claim: "auctioneer tickets restore an equilibrium, reached by best-response dynamics", run: thm36 },
    Example { name: "thm38-dynamics", claim: "positive valuations, given budgets: best-response dynamics find an equilibrium", run: thm38 },
    Example { name: "thm310", claim: "common valuations, single tickets: greedy placement is an exact equilibrium", run: thm310 },
    Example { name: "prop311", claim: "three tickets against one on two equal items: no pure equilibrium", run: prop311 },
    Example { name: "prop312", claim: "two items, single tickets of any weight: a pure equilibrium exists", run: prop312 },
    Example { name: "alg2", claim: "identical single tickets: the arrival cascade ends in an exact equilibrium", run: alg2 },
    Example { name: "thm42", claim: "common valuations, costly weight: x_ij = (n-1) v_j / n^2 is an equilibrium", run: thm42 },
    Example { name: "prop43", claim: "a zero valuation can rule out pure equilibria under costly weight", run: prop43 },
    Example { name: "thm44", claim: "costly weight with auctioneer tickets: best-response dynamics find an equilibrium", run: thm44 },
];

pub fn find(name: &str) -> Option<&'static Example> {
    REGISTRY.iter().find(|e| e.name == name)
}

#[derive(Serialize)]
struct Record {
    name: &'static str,
    claim: &'static str,
    passed: bool,
    detail: String,
    data: Value,
}

fn execute(example: &Example) -> Record {
    let (passed, detail, data) = match (example.run)() {
        Ok(v) => (v.passed, v.detail, v.data),
        Err(e) => (false, format!("error: {e}"), Value::Null),
    };
    Record { name: example.name, claim: example.claim, passed, detail, data }
}

pub fn command(args: &ReproArgs) -> Outcome {
    if args.list {
        let mut text = String::new();
        for e in REGISTRY {
            let _ = writeln!(text, "{:<15} {}", e.name, e.claim);
        }
        let names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
        return Outcome { code: exit::OK, summary: text, report: json!({ "registry": names }), error: false };
    }
    let selected: Vec<&Example> = match (&args.name, args.all) {
        (_, true) => REGISTRY.iter().collect(),
        (Some(name), false) => match find(name) {
            Some(e) => vec![e],
            None => {
                let names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
                let message = format!("unknown example {name:?}; known: {}", names.join(", "));
                return Outcome {
                    code: exit::INVALID,
                    summary: format!("error: {message}\n"),
                    report: json!({ "error": message, "exit_code": exit::INVALID }),
                    error: true,
                };
            }
        },
        (None, false) => {
            let message = "name an example or pass --all (see --list)".to_string();
            return Outcome {
                code: exit::INVALID,
                summary: format!("error: {message}\n"),
                report: json!({ "error": message, "exit_code": exit::INVALID }),
                error: true,
            };
        }
    };
    let records: Vec<Record> = selected.into_iter().map(execute).collect();
    let mut text = String::new();
    for r in &records {
        let _ = writeln!(text, "[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.claim);
        let _ = writeln!(text, "       {}", r.detail);
    }
    let failed = records.iter().filter(|r| !r.passed).count();
    let _ = writeln!(text, "{} passed, {failed} failed", records.len() - failed);
    let code = if failed == 0 { exit::OK } else { exit::CHECK_FAILED };
    Outcome { code, summary: text, report: json!({ "command": "repro", "results": records, "exit_code": code }), error: false }
}

fn zero_valuation_given() -> AuctionInstance {
    AuctionInstance::given(vec![vec![0.0, 1.0], vec![1.0, 3.0]], vec![1.0, 1.0])
}

fn zero_valuation_costly() -> AuctionInstance {
    AuctionInstance::costly(vec![vec![1.0, 0.0], vec![1.0, 1.0]])
}

fn singles(values: Vec<Vec<f64>>, weights: Vec<f64>) -> AuctionInstance {
    AuctionInstance::given_discrete(values, weights.into_iter().map(|w| vec![w]).collect())
}

/// Largest entrywise distance between `x` and an independently written formula.
fn formula_distance(x: &ContinuousProfile, formula: impl Fn(usize, usize) -> f64) -> f64 {
    x.rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &y)| (i, j, y)))
        .map(|(i, j, y)| (y - formula(i, j)).abs())
        .fold(0.0, f64::max)
}

fn closed_form_verdict(inst: &AuctionInstance, x: ContinuousProfile, formula: impl Fn(usize, usize) -> f64) -> Result<Verdict> {
    let cert = epsilon_nash_check_continuous(inst, &x)?;
    let distance = formula_distance(&x, formula);
    Ok(Verdict {
        passed: cert.epsilon <= CLOSED_FORM_EPSILON && distance <= 1e-12,
        detail: format!("epsilon {:.2e} (bound {CLOSED_FORM_EPSILON:e}), distance to formula {distance:.1e}", cert.epsilon),
        data: json!({ "profile": x, "certificate": cert }),
    })
}

fn thm32() -> Result<Verdict> {
    let v = [1.0, 2.0, 3.0];
    let w = [1.0, 2.0, 0.5];
    let inst = AuctionInstance::given(vec![v.to_vec(); 3], w.to_vec());
    let x = symmetric_equilibrium_given(&inst)?;
    closed_form_verdict(&inst, x, |i, j| w[i] * v[j] / 6.0)
}

fn cor33() -> Result<Verdict> {
    let v = [5.0, 1.0, 2.0, 2.0];
    let inst = AuctionInstance::given(vec![v.to_vec(); 4], vec![1.0; 4]);
    let x = symmetric_equilibrium_given(&inst)?;
    closed_form_verdict(&inst, x, |_, j| v[j] / 10.0)
}

fn thm42() -> Result<Verdict> {
    let v = [4.0, 8.0, 1.0];
    let inst = AuctionInstance::costly(vec![v.to_vec(); 3]);
    let x = symmetric_equilibrium_costly(&inst)?;
    closed_form_verdict(&inst, x, |_, j| 2.0 / 9.0 * v[j])
}

fn audit_verdict(inst: &AuctionInstance, candidate: Option<ContinuousProfile>) -> Result<Verdict> {
    let report = nonexistence_grid_audit(inst, &AuditConfig::new(AUDIT_STEP, AUDIT_DEVIATION_STEP))?;
    let mut passed = report.min_gap > 0.0;
    let mut detail = format!(
        "min_gap {:.3e} over {} grid profiles (h = {AUDIT_STEP}, h' = {AUDIT_DEVIATION_STEP})",
        report.min_gap, report.grid_size
    );
    let mut data = json!({ "audit": report });
    if let Some(x) = candidate {
        let cert = epsilon_nash_check_continuous(inst, &x)?;
        passed &= cert.gaps[1] > 0.0 && !cert.attained[1];
        let _ = write!(detail, "; both all-in on item 0 leaves player 1 a gap of {:.3e} (not attained)", cert.gaps[1]);
        data["candidate"] = json!({ "profile": x, "certificate": cert });
    }
    Ok(Verdict { passed, detail, data })
}

fn prop35() -> Result<Verdict> {
    let candidate = ContinuousProfile::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    audit_verdict(&zero_valuation_given(), Some(candidate))
}

fn prop43() -> Result<Verdict> {
    audit_verdict(&zero_valuation_costly(), None)
}

fn dynamics_verdict(instances: &[AuctionInstance]) -> Result<Verdict> {
    let cfg = DynamicsConfig { epsilon: DYNAMICS_EPSILON, ..Default::default() };
    let mut passed = true;
    let mut parts = Vec::new();
    let mut data = Vec::new();
    for inst in instances {
        let out = best_response_dynamics(inst, &interior_start(inst), &cfg)?;
        let cert = epsilon_nash_check_continuous(inst, &out.profile)?;
        passed &= out.converged && cert.epsilon <= DYNAMICS_EPSILON;
        parts.push(format!(
            "{} in {} rounds (epsilon {:.1e})",
            if out.converged { "converged" } else { "not converged" },
            out.rounds,
            cert.epsilon
        ));
        data.push(json!({ "instance": inst, "outcome": out, "certificate": cert }));
    }
    Ok(Verdict { passed, detail: parts.join("; "), data: Value::Array(data) })
}

fn thm36() -> Result<Verdict> {
    dynamics_verdict(&[zero_valuation_given().with_delta(vec![0.01, 0.01])])
}

fn thm38() -> Result<Verdict> {
    dynamics_verdict(&[
        AuctionInstance::given(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![1.0, 1.0]),
        AuctionInstance::given(
            vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0], vec![2.0, 3.0, 1.0]],
            vec![1.0, 2.0, 3.0],
        ),
        AuctionInstance::given(
            vec![vec![5.0, 1.0, 1.0], vec![1.0, 1.0, 1.0], vec![0.5, 2.0, 4.0], vec![1.0, 0.1, 9.0]],
            vec![1.0, 1.0, 2.0, 0.5],
        ),
    ])
}

fn thm44() -> Result<Verdict> {
    dynamics_verdict(&[zero_valuation_costly().with_delta(vec![0.1, 0.1])])
}

fn exact_verdict(inst: &AuctionInstance, a: &DiscreteAssignment, expected: Option<&DiscreteAssignment>) -> Result<Verdict> {
    let cert = exact_nash_check_discrete(inst, a)?;
    let all = exhaustive_equilibrium_search(inst)?;
    let listed = all.iter().any(|e| equivalent_assignments(inst, e, a));
    let matches = expected.is_none_or(|e| equivalent_assignments(inst, e, a));
    let items: Vec<String> = a.tickets.iter().map(|t| format!("{t:?}")).collect();
    Ok(Verdict {
        passed: cert.is_exact_nash() && listed && matches,
        detail: format!(
            "assignment {} has exact gaps [{}]; {} of {} enumerated equilibria",
            items.join(" "),
            cert.exact_gaps.iter().flatten().map(|g| g.to_string()).collect::<Vec<_>>().join(", "),
            if listed { "one" } else { "not one" },
            all.len()
        ),
        data: json!({ "assignment": a, "certificate": cert, "equilibria": all }),
    })
}

fn thm310() -> Result<Verdict> {
    let inst = singles(vec![vec![4.0, 2.0]; 3], vec![2.0, 1.0, 1.0]);
    let a = greedy_symmetric_players(&inst)?;
    exact_verdict(&inst, &a, Some(&DiscreteAssignment::single(vec![0, 1, 0])))
}

fn prop312() -> Result<Verdict> {
    let inst = singles(
        vec![vec![3.0, 2.0], vec![1.0, 0.0], vec![4.0, 3.0], vec![4.0, 5.0]],
        vec![5.0, 2.0, 3.0, 5.0],
    );
    let a = two_item_asymmetric(&inst)?;
    exact_verdict(&inst, &a, None)
}

fn alg2() -> Result<Verdict> {
    let inst = singles(
        vec![vec![4.0, 3.0, 1.0], vec![4.0, 1.0, 2.0], vec![4.0, 1.0, 0.5], vec![1.0, 2.0, 6.0]],
        vec![1.0; 4],
    );
    let (a, moves) = arrival_cascade_traced(&inst)?;
    let mut v = exact_verdict(&inst, &a, None)?;
    let bounded = moves.iter().all(|&k| k <= inst.n());
    v.passed &= bounded;
    let _ = write!(v.detail, "; moves per arrival {moves:?}");
    v.data["moves_per_arrival"] = json!(moves);
    Ok(v)
}

fn prop311() -> Result<Verdict> {
    let inst = AuctionInstance::given_discrete(vec![vec![1.0, 1.0]; 2], vec![vec![1.0; 3], vec![1.0]]);
    let profiles: u128 = inst
        .players
        .iter()
        .filter_map(|p| p.budget.tickets())
        .map(|t| strategy_count(t, inst.m(), true))
        .product();
    let found = exhaustive_equilibrium_search(&inst)?;
    let quoted = DiscreteAssignment::new(vec![vec![0, 0, 1], vec![0]]);
    let u = expected_utility_discrete(&inst, &quoted)?;
    let cert = exact_nash_check_discrete(&inst, &quoted)?;
    let gap = cert.exact_gaps.as_ref().map(|g| g[1].clone()).unwrap_or_else(Exact::zero);
    let expected = Exact::ratio(1, 6);
    Ok(Verdict {
        passed: profiles == 8 && found.is_empty() && gap == expected,
        detail: format!(
            "{} equilibria among {profiles} profiles; with two tickets and the single ticket on item 0, \
             the single-ticket player earns {:.4} and gains exactly {gap} by moving (v = 1)",
            found.len(),
            u[1]
        ),
        data: json!({ "profiles": profiles as u64, "equilibria": found, "witness": quoted, "certificate": cert }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
        assert_eq!(REGISTRY.len(), 12);
    }

    #[test]
    fn fast_examples_pass() {
        for name in ["thm32", "cor33", "thm36", "thm38-dynamics", "thm310", "prop311", "prop312", "alg2", "thm42", "thm44"] {
            let record = execute(find(name).unwrap());
            assert!(record.passed, "{name}: {}", record.detail);
        }
    }
}
