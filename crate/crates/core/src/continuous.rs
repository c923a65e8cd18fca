//! Best responses and equilibria for continuous budgets.
//!
//! Against fixed opposing weights `A_j` (auctioneer ticket plus every other
//! player), a given-ticket player maximizes `sum_j v_j y_j / (A_j + y_j)` over
//! the simplex `sum_j y_j = w`. The objective is strictly concave wherever all
//! `A_j > 0`, and the KKT conditions give the water-filling form
//! `y_j(lambda) = max(0, sqrt(v_j A_j / lambda) - A_j)` with `lambda` chosen
//! so the budget is spent exactly.
//!
//! A costly-ticket player faces no budget, so items decouple and each has the
//! closed form `y_j = max(0, sqrt(v_j A_j) - A_j)`.
//!
//! When `A_j = 0` and `v_j > 0` the payoff jumps at `y_j = 0`: any positive
//! bid takes the whole item, so the best response is a supremum that no
//! allocation attains. Such results carry `attained = false`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_profile, opposing_totals, player_utility, AuctionInstance, ContinuousProfile, Mode,
};

/// Total mass placed on uncontested items by the witness of an open supremum.
pub const WITNESS_MASS: f64 = 1e-6;

const BISECTION_ITERATIONS: usize = 200;
const BISECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub allocation: Vec<f64>,
    /// Utility of `allocation`, or the supremum when `attained` is false.
    pub value: f64,
    pub attained: bool,
    /// Budget multiplier of the water-filling solution; 0 when not applicable.
    pub lambda: f64,
    /// Items whose prize is only approached by vanishing bids.
    pub open_items: Vec<usize>,
}

fn check_inputs(inst: &AuctionInstance, player: usize, opposing: &[f64]) -> Result<()> {
    if player >= inst.n() {
        return Err(Error::DimensionMismatch(format!("player {player} of {}", inst.n())));
    }
    if opposing.len() != inst.m() {
        return Err(Error::DimensionMismatch(format!(
            "{} opposing totals for {} items",
            opposing.len(),
            inst.m()
        )));
    }
    if let Some(j) = opposing.iter().position(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::NegativeInput(format!("opposing total on item {j} is {}", opposing[j])));
    }
    if let Some(j) = inst.players[player].valuations.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NegativeInput(format!("valuation of player {player} on item {j}")));
    }
    Ok(())
}

/// Water-filling allocation of `budget` over `items`, all of which must have
/// `values[j] > 0` and `opposing[j] > 0`. Entries outside `items` stay 0.
///
/// Returns the allocation and the multiplier `lambda`.
pub fn water_fill(values: &[f64], opposing: &[f64], items: &[usize], budget: f64) -> (Vec<f64>, f64) {
    let mut alloc = vec![0.0; values.len()];
    if items.is_empty() {
        return (alloc, 0.0);
    }
    let marginal_at_zero = |j: usize| values[j] / opposing[j];
    if budget <= 0.0 {
        let lambda = items.iter().map(|&j| marginal_at_zero(j)).fold(0.0, f64::max);
        return (alloc, lambda);
    }
    let spend = |lambda: f64| -> f64 {
        items
            .iter()
            .map(|&j| ((values[j] * opposing[j] / lambda).sqrt() - opposing[j]).max(0.0))
            .sum()
    };
    // spend(lo) >= budget: the item attaining the minimum alone absorbs the budget.
    let mut lo = items
        .iter()
        .map(|&j| values[j] * opposing[j] / (opposing[j] + budget).powi(2))
        .fold(f64::INFINITY, f64::min);
    // spend(hi) = 0: no item is worth a marginal unit.
    let mut hi = items.iter().map(|&j| marginal_at_zero(j)).fold(0.0, f64::max);
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..BISECTION_ITERATIONS {
        lambda = (lo * hi).sqrt();
        if !(lambda > lo && lambda < hi) {
            lambda = 0.5 * (lo + hi);
        }
        let s = spend(lambda);
        if (s - budget).abs() <= BISECTION_TOLERANCE * budget.max(1.0) {
            break;
        }
        if s > budget {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }

    // With the support known the multiplier has a closed form; use it when
    // the support it implies is self-consistent.
    let support: Vec<usize> = items
        .iter()
        .copied()
        .filter(|&j| (values[j] * opposing[j] / lambda).sqrt() > opposing[j])
        .collect();
    if !support.is_empty() {
        let root_sum: f64 = support.iter().map(|&j| (values[j] * opposing[j]).sqrt()).sum();
        let scale = (budget + support.iter().map(|&j| opposing[j]).sum::<f64>()) / root_sum;
        let consistent = items.iter().all(|&j| {
            let y = (values[j] * opposing[j]).sqrt() * scale - opposing[j];
            if support.contains(&j) {
                y > 0.0
            } else {
                y <= 0.0
            }
        });
        if consistent {
            for &j in &support {
                alloc[j] = (values[j] * opposing[j]).sqrt() * scale - opposing[j];
            }
            return (alloc, 1.0 / (scale * scale));
        }
    }

    for &j in items {
        alloc[j] = ((values[j] * opposing[j] / lambda).sqrt() - opposing[j]).max(0.0);
    }
    let total: f64 = alloc.iter().sum();
    if total > 0.0 {
        alloc.iter_mut().for_each(|y| *y *= budget / total);
    }
    (alloc, lambda)
}

fn prize_sum(values: &[f64], opposing: &[f64], alloc: &[f64], items: &[usize]) -> f64 {
    items
        .iter()
        .map(|&j| {
            let t = opposing[j] + alloc[j];
            if t > 0.0 {
                values[j] * alloc[j] / t
            } else {
                0.0
            }
        })
        .sum()
}

/// Best response of a given-ticket player with a continuous budget.
pub fn best_response_given(inst: &AuctionInstance, player: usize, opposing: &[f64]) -> Result<BestResponse> {
    check_inputs(inst, player, opposing)?;
    let w = inst.budget(player);
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::NegativeInput(format!("budget of player {player} is {w}")));
    }
    let v = &inst.players[player].valuations;
    let m = inst.m();

    let open: Vec<usize> = (0..m).filter(|&j| v[j] > 0.0 && opposing[j] == 0.0).collect();
    let contested: Vec<usize> = (0..m).filter(|&j| v[j] > 0.0 && opposing[j] > 0.0).collect();

    if w == 0.0 {
        return Ok(BestResponse { allocation: vec![0.0; m], value: 0.0, attained: true, lambda: 0.0, open_items: vec![] });
    }
    if open.is_empty() && contested.is_empty() {
        // Nothing is worth anything; any spending pattern is optimal.
        let allocation = vec![w / m as f64; m];
        return Ok(BestResponse { allocation, value: 0.0, attained: true, lambda: 0.0, open_items: vec![] });
    }
    if open.is_empty() {
        let (allocation, lambda) = water_fill(v, opposing, &contested, w);
        let value = player_utility(Mode::Given, v, opposing, &allocation);
        return Ok(BestResponse { allocation, value, attained: true, lambda, open_items: vec![] });
    }
    let open_value: f64 = open.iter().map(|&j| v[j]).sum();
    if contested.is_empty() {
        // Spreading the budget over the uncontested items claims all of them.
        let mut allocation = vec![0.0; m];
        for &j in &open {
            allocation[j] = w / open.len() as f64;
        }
        let value = player_utility(Mode::Given, v, opposing, &allocation);
        return Ok(BestResponse { allocation, value, attained: true, lambda: 0.0, open_items: vec![] });
    }

    // The supremum spends a vanishing amount on the open items and the whole
    // budget on the contested ones; the witness keeps a small positive mass.
    let (full, _) = water_fill(v, opposing, &contested, w);
    let value = open_value + prize_sum(v, opposing, &full, &contested);
    let eta = WITNESS_MASS.min(w / 2.0);
    let (mut allocation, _) = water_fill(v, opposing, &contested, w - eta);
    for &j in &open {
        allocation[j] = eta / open.len() as f64;
    }
    Ok(BestResponse { allocation, value, attained: false, lambda: 0.0, open_items: open })
}

/// Best response of a costly-ticket player; items are independent.
pub fn best_response_costly(inst: &AuctionInstance, player: usize, opposing: &[f64]) -> Result<BestResponse> {
    check_inputs(inst, player, opposing)?;
    let v = &inst.players[player].valuations;
    let m = inst.m();
    let open: Vec<usize> = (0..m).filter(|&j| v[j] > 0.0 && opposing[j] == 0.0).collect();
    let mut allocation: Vec<f64> = (0..m)
        .map(|j| {
            if v[j] > 0.0 && opposing[j] > 0.0 {
                ((v[j] * opposing[j]).sqrt() - opposing[j]).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    if open.is_empty() {
        let value = player_utility(Mode::Costly, v, opposing, &allocation);
        return Ok(BestResponse { allocation, value, attained: true, lambda: 0.0, open_items: vec![] });
    }
    let value = player_utility(Mode::Costly, v, opposing, &allocation) + open.iter().map(|&j| v[j]).sum::<f64>();
    let eta = WITNESS_MASS / open.len() as f64;
    for &j in &open {
        allocation[j] = eta.min(v[j] / 2.0);
    }
    Ok(BestResponse { allocation, value, attained: false, lambda: 0.0, open_items: open })
}

/// Dispatches on the instance mode.
pub fn best_response(inst: &AuctionInstance, player: usize, opposing: &[f64]) -> Result<BestResponse> {
    match inst.mode {
        Mode::Given => best_response_given(inst, player, opposing),
        Mode::Costly => best_response_costly(inst, player, opposing),
    }
}

/// How much player `i` gains by switching to a best response, with that response.
pub fn best_response_gap(inst: &AuctionInstance, x: &ContinuousProfile, player: usize) -> Result<(f64, BestResponse)> {
    let opposing = opposing_totals(inst, x, player);
    let br = best_response(inst, player, &opposing)?;
    let current = player_utility(inst.mode, &inst.players[player].valuations, &opposing, x.row(player));
    Ok((br.value - current, br))
}

fn require_continuous(inst: &AuctionInstance) -> Result<()> {
    inst.ensure_valid()?;
    if !inst.all_continuous() {
        return Err(Error::WrongBudgetKind { expected: "continuous" });
    }
    Ok(())
}

/// Every player spends the same fraction `v_j / sum(v)` of its budget on item `j`.
///
/// This is an equilibrium for symmetric valuations without auctioneer tickets.
pub fn symmetric_equilibrium_given(inst: &AuctionInstance) -> Result<ContinuousProfile> {
    require_continuous(inst)?;
    if inst.mode != Mode::Given {
        return Err(Error::WrongMode { expected: "given" });
    }
    if !inst.has_symmetric_valuations() {
        return Err(Error::AsymmetricValuations);
    }
    let v = &inst.players[0].valuations;
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroValuations);
    }
    let rows = (0..inst.n())
        .map(|i| {
            let w = inst.budget(i);
            v.iter().map(|&vj| vj / total * w).collect()
        })
        .collect();
    Ok(ContinuousProfile::new(rows))
}

/// Every player bids `(n - 1) / n^2 * v_j` on item `j`.
///
/// An equilibrium for symmetric costly instances with two or more players and
/// no auctioneer tickets. A lone player gets the all-zero profile, against
/// which its best response is an open supremum.
pub fn symmetric_equilibrium_costly(inst: &AuctionInstance) -> Result<ContinuousProfile> {
    require_continuous(inst)?;
    if inst.mode != Mode::Costly {
        return Err(Error::WrongMode { expected: "costly" });
    }
    if !inst.has_symmetric_valuations() {
        return Err(Error::AsymmetricValuations);
    }
    let n = inst.n() as f64;
    let factor = (n - 1.0) / (n * n);
    let row: Vec<f64> = inst.players[0].valuations.iter().map(|&v| factor * v).collect();
    Ok(ContinuousProfile::new(vec![row; inst.n()]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub max_rounds: usize,
    /// Weight of the best response in each update, in `(0, 1]`.
    pub damping: f64,
    /// Stop once no player can gain more than this.
    pub epsilon: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self { max_rounds: 10_000, damping: 0.5, epsilon: 1e-8 }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!("damping {} is outside (0, 1]", self.damping)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon {} must be positive", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOutcome {
    pub profile: ContinuousProfile,
    pub converged: bool,
    pub rounds: usize,
    /// Largest best-response gap at the returned profile.
    pub final_gap: f64,
}

/// Interior starting point: an even split of each budget (given mode) or a
/// quarter of each valuation (costly mode).
pub fn interior_start(inst: &AuctionInstance) -> ContinuousProfile {
    let m = inst.m();
    let rows = (0..inst.n())
        .map(|i| match inst.mode {
            Mode::Given => vec![inst.budget(i) / m as f64; m],
            Mode::Costly => inst.players[i].valuations.iter().map(|v| v / 4.0).collect(),
        })
        .collect();
    ContinuousProfile::new(rows)
}

fn attained_or_fail(player: usize, br: &BestResponse) -> Result<()> {
    match br.open_items.first() {
        Some(&item) if !br.attained => Err(Error::BestResponseNotAttained { player, item }),
        _ => Ok(()),
    }
}

fn largest_gap(inst: &AuctionInstance, x: &ContinuousProfile) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..inst.n() {
        let (gap, br) = best_response_gap(inst, x, i)?;
        attained_or_fail(i, &br)?;
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Round-robin damped best-response dynamics: `x_i <- (1 - theta) x_i + theta BR_i`.
///
/// Convergence is not guaranteed in general; the outcome reports whether the
/// gap fell below `cfg.epsilon` within `cfg.max_rounds`.
pub fn best_response_dynamics(
    inst: &AuctionInstance,
    start: &ContinuousProfile,
    cfg: &DynamicsConfig,
) -> Result<DynamicsOutcome> {
    require_continuous(inst)?;
    cfg.validate()?;
    check_profile(inst, start)?;
    let mut x = start.clone();
    let moves: Vec<bool> = inst
        .players
        .iter()
        .map(|p| inst.mode == Mode::Costly || p.valuations.iter().any(|&v| v > 0.0))
        .collect();
    let theta = cfg.damping;

    let mut gap = largest_gap(inst, &x)?;
    if gap <= cfg.epsilon {
        return Ok(DynamicsOutcome { profile: x, converged: true, rounds: 0, final_gap: gap });
    }
    for round in 1..=cfg.max_rounds {
        for (i, _) in moves.iter().enumerate().filter(|(_, &active)| active) {
            let opposing = opposing_totals(inst, &x, i);
            let br = best_response(inst, i, &opposing)?;
            attained_or_fail(i, &br)?;
            for (xi, bi) in x.rows[i].iter_mut().zip(&br.allocation) {
                *xi = (1.0 - theta) * *xi + theta * bi;
            }
        }
        gap = largest_gap(inst, &x)?;
        if gap <= cfg.epsilon {
            return Ok(DynamicsOutcome { profile: x, converged: true, rounds: round, final_gap: gap });
        }
    }
    Ok(DynamicsOutcome { profile: x, converged: false, rounds: cfg.max_rounds, final_gap: gap })
}
