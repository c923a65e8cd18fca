//! The `solve`, `verify`, `audit` and `simulate` commands.

use std::fmt::Write as _;
use std::path::Path;

use chinese_auction::continuous::{
    best_response_dynamics, interior_start, symmetric_equilibrium_costly, symmetric_equilibrium_given, DynamicsConfig,
};
use chinese_auction::discrete::{
    arrival_cascade, exhaustive_equilibrium_search, greedy_symmetric_players, two_item_asymmetric,
};
use chinese_auction::model::{expected_utility, expected_utility_discrete};
use chinese_auction::verify::{
    epsilon_nash_check_continuous, exact_nash_check_discrete, monte_carlo_utilities, nonexistence_grid_audit,
    AuditConfig, AuditGrid, EquilibriumCertificate,
};
use chinese_auction::{AuctionInstance, ContinuousProfile, DiscreteAssignment, Error, Mode};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{exit, AuditArgs, Expectation, Outcome, SimulateArgs, SolveArgs, Solver, VerifyArgs};

/// A command that could not run.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure { code: exit::INVALID, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ExplosionGuard { .. } => exit::GUARD,
            Error::BestResponseNotAttained { .. } | Error::RepairDidNotSettle { .. } => exit::NO_EQUILIBRIUM,
            _ => exit::INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<Failure> for Outcome {
    fn from(f: Failure) -> Self {
        Outcome {
            code: f.code,
            summary: format!("error: {}\n", f.message),
            report: json!({ "error": f.message, "exit_code": f.code }),
            error: true,
        }
    }
}

fn finish(result: Result<Outcome, Failure>) -> Outcome {
    result.unwrap_or_else(Outcome::from)
}

pub fn load_instance(path: &Path) -> Result<AuctionInstance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let inst = AuctionInstance::from_json(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    inst.ensure_valid()?;
    if !inst.all_continuous() && !inst.all_discrete() {
        return Err(Failure::invalid("instance mixes continuous budgets and tickets"));
    }
    Ok(inst)
}

/// A candidate read from a profile file.
#[derive(Debug, Clone)]
pub enum Candidate {
    Continuous(ContinuousProfile),
    Discrete(DiscreteAssignment),
}

/// Reads a bare matrix, or the `profile` / `assignment` field of a result file.
pub fn load_candidate(path: &Path, inst: &AuctionInstance) -> Result<Candidate, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let value = match value {
        Value::Object(map) => map
            .get("profile")
            .or_else(|| map.get("assignment"))
            .cloned()
            .ok_or_else(|| Failure::invalid(format!("{}: no profile or assignment field", path.display())))?,
        other => other,
    };
    let bad = |e: serde_json::Error| Failure::invalid(format!("{}: {e}", path.display()));
    if inst.all_discrete() {
        Ok(Candidate::Discrete(serde_json::from_value(value).map_err(bad)?))
    } else {
        Ok(Candidate::Continuous(serde_json::from_value(value).map_err(bad)?))
    }
}

/// Structural features that decide which solver applies.
#[derive(Debug, Clone, Serialize)]
pub struct Shape {
    pub mode: Mode,
    pub players: usize,
    pub items: usize,
    pub discrete: bool,
    pub symmetric_valuations: bool,
    pub auctioneer_tickets: bool,
    pub single_tickets: bool,
    pub equal_tickets: bool,
}

impl Shape {
    pub fn of(inst: &AuctionInstance) -> Self {
        let tickets: Vec<&[f64]> = inst.players.iter().filter_map(|p| p.budget.tickets()).collect();
        let single = inst.all_discrete() && tickets.iter().all(|t| t.len() == 1);
        Shape {
            mode: inst.mode,
            players: inst.n(),
            items: inst.m(),
            discrete: inst.all_discrete(),
            symmetric_valuations: inst.has_symmetric_valuations(),
            auctioneer_tickets: inst.has_auctioneer_tickets(),
            single_tickets: single,
            equal_tickets: single && tickets.iter().all(|t| t[0] == tickets[0][0]),
        }
    }

    /// The solver with the strongest guarantee for this shape.
    pub fn solver(&self) -> Solver {
        if self.discrete {
            return match self {
                s if s.single_tickets && s.symmetric_valuations => Solver::Greedy,
                s if s.single_tickets && s.items == 2 => Solver::TwoItem,
                s if s.equal_tickets => Solver::Cascade,
                _ => Solver::Exhaustive,
            };
        }
        match (self.mode, self.symmetric_valuations) {
            (Mode::Given, true) => Solver::SymmetricGiven,
            (Mode::Costly, true) if self.players >= 2 => Solver::SymmetricCostly,
            _ => Solver::Dynamics,
        }
    }

    fn describe(&self) -> String {
        format!(
            "{} mode, {} players, {} items, {}{}{}",
            match self.mode {
                Mode::Given => "given",
                Mode::Costly => "costly",
            },
            self.players,
            self.items,
            if self.discrete { "tickets" } else { "continuous budgets" },
            if self.symmetric_valuations { ", common valuations" } else { "" },
            if self.auctioneer_tickets { ", auctioneer tickets" } else { "" },
        )
    }
}

fn solver_name(s: Solver) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn fmt_row(row: &[f64]) -> String {
    row.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

fn write_profile(text: &mut String, x: &ContinuousProfile) {
    for (i, row) in x.rows.iter().enumerate() {
        let _ = writeln!(text, "  player {i}: {}", fmt_row(row));
    }
}

fn write_assignment(text: &mut String, a: &DiscreteAssignment) {
    for (i, row) in a.tickets.iter().enumerate() {
        let items: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(text, "  player {i}: tickets on items [{}]", items.join(", "));
    }
}

fn write_certificate(text: &mut String, cert: &EquilibriumCertificate) {
    let _ = writeln!(text, "best-response gaps:");
    for (i, g) in cert.gaps.iter().enumerate() {
        let exact = cert.exact_gaps.as_ref().map(|e| format!(" (exactly {})", e[i])).unwrap_or_default();
        let open = if cert.attained[i] { "" } else { " (supremum, not attained)" };
        let _ = writeln!(text, "  player {i}: {g:.3e}{exact}{open}");
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), Failure> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Failure::invalid(format!("--epsilon must be positive, got {epsilon}")))
    }
}

pub fn solve(args: &SolveArgs) -> Outcome {
    finish(solve_inner(args))
}

fn solve_inner(args: &SolveArgs) -> Result<Outcome, Failure> {
    check_epsilon(args.epsilon)?;
    let inst = load_instance(&args.instance)?;
    let shape = Shape::of(&inst);
    let auto = shape.solver();
    let solver = args.solver.unwrap_or(auto);
    let mut text = String::new();
    let _ = writeln!(text, "instance: {} ({})", args.instance.display(), shape.describe());
    let origin = if args.solver.is_some() { "requested" } else { "auto-detected" };
    let _ = writeln!(text, "solver: {} ({origin})", solver_name(solver));
    let mut report = json!({
        "command": "solve",
        "instance": args.instance,
        "shape": shape,
        "solver": solver,
    });

    let continuous = matches!(solver, Solver::SymmetricGiven | Solver::SymmetricCostly | Solver::Dynamics);
    if continuous == shape.discrete {
        return Err(Failure::invalid(format!(
            "solver {} does not apply to {}",
            solver_name(solver),
            if shape.discrete { "ticket budgets" } else { "continuous budgets" }
        )));
    }

    if continuous {
        let mut code = exit::OK;
        let mut verdict = "epsilon-equilibrium";
        let profile = match solver {
            Solver::SymmetricGiven => symmetric_equilibrium_given(&inst)?,
            Solver::SymmetricCostly => symmetric_equilibrium_costly(&inst)?,
            _ => {
                let cfg = DynamicsConfig { max_rounds: args.max_rounds, damping: args.theta, epsilon: args.epsilon };
                let out = best_response_dynamics(&inst, &interior_start(&inst), &cfg)?;
                report["dynamics"] = json!({
                    "converged": out.converged,
                    "rounds": out.rounds,
                    "final_gap": out.final_gap,
                    "theta": args.theta,
                    "max_rounds": args.max_rounds,
                });
                let _ = writeln!(
                    text,
                    "dynamics: {} after {} rounds (largest gap {:.3e})",
                    if out.converged { "converged" } else { "did not converge" },
                    out.rounds,
                    out.final_gap
                );
                if !out.converged {
                    code = exit::NO_EQUILIBRIUM;
                    verdict = "not-converged";
                }
                out.profile
            }
        };
        let cert = epsilon_nash_check_continuous(&inst, &profile)?;
        if code == exit::OK && !cert.is_epsilon_nash(args.epsilon) {
            code = exit::NO_EQUILIBRIUM;
            verdict = "epsilon-not-met";
        }
        let _ = writeln!(text, "profile:");
        write_profile(&mut text, &profile);
        write_certificate(&mut text, &cert);
        let _ = writeln!(text, "epsilon: {:.3e} (requested {:e})", cert.epsilon, args.epsilon);
        let _ = writeln!(text, "verdict: {verdict}");
        report["utilities"] = json!(expected_utility(&inst, &profile)?);
        report["profile"] = json!(profile);
        report["certificate"] = json!(cert);
        report["epsilon_requested"] = json!(args.epsilon);
        report["verdict"] = json!(verdict);
        report["exit_code"] = json!(code);
        return Ok(Outcome { code, summary: text, report, error: false });
    }

    let assignment = match solver {
        Solver::Greedy => greedy_symmetric_players(&inst)?,
        Solver::TwoItem => two_item_asymmetric(&inst)?,
        Solver::Cascade => arrival_cascade(&inst)?,
        _ => {
            let found = exhaustive_equilibrium_search(&inst)?;
            report["equilibria_found"] = json!(found.len());
            report["equilibria"] = json!(found);
            let _ = writeln!(text, "enumeration: {} pure equilibria (up to swapping equal tickets)", found.len());
            match found.into_iter().next() {
                Some(a) => a,
                None => {
                    let _ = writeln!(text, "verdict: no pure equilibrium exists");
                    report["verdict"] = json!("no-pure-equilibrium");
                    report["exit_code"] = json!(exit::NO_EQUILIBRIUM);
                    return Ok(Outcome { code: exit::NO_EQUILIBRIUM, summary: text, report, error: false });
                }
            }
        }
    };
    let cert = exact_nash_check_discrete(&inst, &assignment)?;
    let (code, verdict) = if cert.is_exact_nash() {
        (exit::OK, "exact-equilibrium")
    } else {
        (exit::NO_EQUILIBRIUM, "not-an-equilibrium")
    };
    let _ = writeln!(text, "assignment:");
    write_assignment(&mut text, &assignment);
    write_certificate(&mut text, &cert);
    let _ = writeln!(text, "verdict: {verdict}");
    report["utilities"] = json!(expected_utility_discrete(&inst, &assignment)?);
    report["assignment"] = json!(assignment);
    report["certificate"] = json!(cert);
    report["verdict"] = json!(verdict);
    report["exit_code"] = json!(code);
    Ok(Outcome { code, summary: text, report, error: false })
}

pub fn verify(args: &VerifyArgs) -> Outcome {
    finish(verify_inner(args))
}

fn verify_inner(args: &VerifyArgs) -> Result<Outcome, Failure> {
    check_epsilon(args.epsilon)?;
    let inst = load_instance(&args.instance)?;
    let candidate = load_candidate(&args.profile, &inst)?;
    let mut text = String::new();
    let _ = writeln!(text, "instance: {} ({})", args.instance.display(), Shape::of(&inst).describe());
    let (cert, utilities, passed) = match &candidate {
        Candidate::Continuous(x) => {
            let cert = epsilon_nash_check_continuous(&inst, x)?;
            let passed = cert.is_epsilon_nash(args.epsilon);
            (cert, expected_utility(&inst, x)?, passed)
        }
        Candidate::Discrete(a) => {
            let cert = exact_nash_check_discrete(&inst, a)?;
            let passed = cert.is_exact_nash();
            (cert, expected_utility_discrete(&inst, a)?, passed)
        }
    };
    write_certificate(&mut text, &cert);
    let verdict = match (&candidate, passed) {
        (Candidate::Continuous(_), true) => format!("epsilon-equilibrium (epsilon {:.3e} <= {:e})", cert.epsilon, args.epsilon),
        (Candidate::Continuous(_), false) => format!("not an epsilon-equilibrium (epsilon {:.3e} > {:e})", cert.epsilon, args.epsilon),
        (Candidate::Discrete(_), true) => "exact equilibrium".to_string(),
        (Candidate::Discrete(_), false) => "not an equilibrium".to_string(),
    };
    let _ = writeln!(text, "verdict: {verdict}");
    let code = if passed { exit::OK } else { exit::CHECK_FAILED };
    let report = json!({
        "command": "verify",
        "instance": args.instance,
        "profile_file": args.profile,
        "certificate": cert,
        "utilities": utilities,
        "epsilon_requested": args.epsilon,
        "passed": passed,
        "exit_code": code,
    });
    Ok(Outcome { code, summary: text, report, error: false })
}

pub fn audit(args: &AuditArgs) -> Outcome {
    finish(audit_inner(args))
}

fn audit_inner(args: &AuditArgs) -> Result<Outcome, Failure> {
    check_epsilon(args.epsilon)?;
    let inst = load_instance(&args.instance)?;
    let cfg = AuditConfig { grid_step: args.grid, deviation_step: args.dev_grid, keep_cells: args.csv.is_some() };
    let report = nonexistence_grid_audit(&inst, &cfg)?;
    if let Some(path) = &args.csv {
        write_csv(path, &inst, &cfg, &report.cell_gaps)?;
    }
    let passed = match args.expect {
        Expectation::Nonexistence => report.min_gap > args.epsilon,
        Expectation::Equilibrium => report.min_gap <= args.epsilon,
    };
    let mut text = String::new();
    let _ = writeln!(text, "instance: {} ({})", args.instance.display(), Shape::of(&inst).describe());
    let _ = writeln!(
        text,
        "grid: {} profiles at step {}, deviations at step {}",
        report.grid_size, report.grid_step, report.deviation_step
    );
    let _ = writeln!(text, "min_gap: {:.6e}", report.min_gap);
    let _ = writeln!(text, "witness (grid profile attaining min_gap):");
    write_profile(&mut text, &report.witness);
    if report.min_gap > 0.0 {
        let _ = writeln!(
            text,
            "no grid profile is an epsilon-equilibrium for epsilon < {:.3e} at resolution {}; this is evidence, not a proof",
            report.min_gap, report.grid_step
        );
    } else {
        let _ = writeln!(text, "some grid profile is an exact equilibrium");
    }
    let _ = writeln!(
        text,
        "expectation {}: {}",
        match args.expect {
            Expectation::Nonexistence => format!("min_gap > {:e}", args.epsilon),
            Expectation::Equilibrium => format!("min_gap <= {:e}", args.epsilon),
        },
        if passed { "met" } else { "not met" }
    );
    let code = if passed { exit::OK } else { exit::CHECK_FAILED };
    let json = json!({
        "command": "audit",
        "instance": args.instance,
        "report": report,
        "expect": args.expect,
        "epsilon": args.epsilon,
        "passed": passed,
        "exit_code": code,
    });
    Ok(Outcome { code, summary: text, report: json, error: false })
}

fn write_csv(path: &Path, inst: &AuctionInstance, cfg: &AuditConfig, gaps: &[f64]) -> Result<(), Failure> {
    let grid = AuditGrid::new(inst, cfg)?;
    let mut out = String::from("cell");
    for i in 0..inst.n() {
        for j in 0..inst.m() {
            let _ = write!(out, ",x_{i}_{j}");
        }
    }
    out.push_str(",gap\n");
    for (cell, gap) in gaps.iter().enumerate() {
        let _ = write!(out, "{cell}");
        for x in grid.profile(cell as u64).rows.iter().flatten() {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{gap}");
    }
    std::fs::write(path, out).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    finish(simulate_inner(args))
}

/// Simulated means must lie within this many standard errors of the closed form.
pub const SIMULATION_BAND: f64 = 4.0;

fn simulate_inner(args: &SimulateArgs) -> Result<Outcome, Failure> {
    let inst = load_instance(&args.instance)?;
    let (profile, source) = match &args.profile {
        Some(path) => match load_candidate(path, &inst)? {
            Candidate::Continuous(x) => (x, path.display().to_string()),
            Candidate::Discrete(a) => (a.weight_profile(&inst)?, path.display().to_string()),
        },
        None => (default_profile(&inst)?, "solver output".to_string()),
    };
    let sim = monte_carlo_utilities(&inst, &profile, args.trials, args.seed)?;
    let passed = sim.within_band(SIMULATION_BAND);
    let mut text = String::new();
    let _ = writeln!(text, "instance: {} ({})", args.instance.display(), Shape::of(&inst).describe());
    let _ = writeln!(text, "profile: {source}");
    let _ = writeln!(text, "trials: {} (seed {})", sim.trials, sim.seed);
    for i in 0..inst.n() {
        let _ = writeln!(
            text,
            "  player {i}: simulated {:.6} +/- {:.6}, closed form {:.6}",
            sim.mean[i], sim.std_error[i], sim.analytic[i]
        );
    }
    let _ = writeln!(
        text,
        "verdict: {} within {SIMULATION_BAND} standard errors",
        if passed { "all players" } else { "not all players" }
    );
    let code = if passed { exit::OK } else { exit::CHECK_FAILED };
    let report = json!({
        "command": "simulate",
        "instance": args.instance,
        "profile": profile,
        "simulation": sim,
        "band": SIMULATION_BAND,
        "passed": passed,
        "exit_code": code,
    });
    Ok(Outcome { code, summary: text, report, error: false })
}

/// The profile `solve` would produce with default options.
fn default_profile(inst: &AuctionInstance) -> Result<ContinuousProfile, Failure> {
    let solved = match Shape::of(inst).solver() {
        Solver::SymmetricGiven => symmetric_equilibrium_given(inst)?,
        Solver::SymmetricCostly => symmetric_equilibrium_costly(inst)?,
        Solver::Dynamics => best_response_dynamics(inst, &interior_start(inst), &DynamicsConfig::default())?.profile,
        Solver::Greedy => greedy_symmetric_players(inst)?.weight_profile(inst)?,
        Solver::TwoItem => two_item_asymmetric(inst)?.weight_profile(inst)?,
        Solver::Cascade => arrival_cascade(inst)?.weight_profile(inst)?,
        Solver::Exhaustive => match exhaustive_equilibrium_search(inst)?.into_iter().next() {
            Some(a) => a.weight_profile(inst)?,
            None => {
                return Err(Failure {
                    code: exit::NO_EQUILIBRIUM,
                    message: "no pure equilibrium exists; pass --profile".into(),
                })
            }
        },
    };
    Ok(solved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_pick_solvers() {
        let sym = AuctionInstance::given(vec![vec![1.0, 2.0]; 3], vec![1.0; 3]);
        assert_eq!(Shape::of(&sym).solver(), Solver::SymmetricGiven);
        let asym = AuctionInstance::given(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![1.0; 2]);
        assert_eq!(Shape::of(&asym).solver(), Solver::Dynamics);
        let costly = AuctionInstance::costly(vec![vec![1.0, 2.0]; 2]);
        assert_eq!(Shape::of(&costly).solver(), Solver::SymmetricCostly);
        let lone = AuctionInstance::costly(vec![vec![1.0, 2.0]]);
        assert_eq!(Shape::of(&lone).solver(), Solver::Dynamics);

        let singles = |v: Vec<Vec<f64>>, w: Vec<f64>| {
            AuctionInstance::given_discrete(v, w.into_iter().map(|x| vec![x]).collect())
        };
        assert_eq!(Shape::of(&singles(vec![vec![1.0, 2.0, 3.0]; 2], vec![1.0, 2.0])).solver(), Solver::Greedy);
        assert_eq!(Shape::of(&singles(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![1.0, 2.0])).solver(), Solver::TwoItem);
        assert_eq!(
            Shape::of(&singles(vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]], vec![1.0, 1.0])).solver(),
            Solver::Cascade
        );
        assert_eq!(
            Shape::of(&singles(vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]], vec![1.0, 2.0])).solver(),
            Solver::Exhaustive
        );
        let multi = AuctionInstance::given_discrete(vec![vec![1.0, 1.0]; 2], vec![vec![1.0; 3], vec![1.0]]);
        assert_eq!(Shape::of(&multi).solver(), Solver::Exhaustive);
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let guard = Failure::from(Error::ExplosionGuard { what: "x", count: 2, limit: 1 });
        assert_eq!(guard.code, exit::GUARD);
        let open = Failure::from(Error::BestResponseNotAttained { player: 1, item: 0 });
        assert_eq!(open.code, exit::NO_EQUILIBRIUM);
        assert_eq!(Failure::from(Error::InvalidConfig("x".into())).code, exit::INVALID);
    }

    #[test]
    fn solver_names_are_kebab_case() {
        assert_eq!(solver_name(Solver::SymmetricGiven), "symmetric-given");
        assert_eq!(solver_name(Solver::TwoItem), "two-item");
    }
}
