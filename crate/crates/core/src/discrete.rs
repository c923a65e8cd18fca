//! Equilibria for indivisible tickets.
//!
//! Three constructive procedures cover the shapes where a pure equilibrium is
//! known to exist when every player holds a single ticket:
//!
//! * [`greedy_symmetric_players`]: common valuations, arbitrary ticket weights.
//! * [`two_item_asymmetric`]: two items, arbitrary valuations and weights.
//! * [`arrival_cascade`]: arbitrary valuations, identical ticket weights.
//!
//! Everything else is handled by exhaustive enumeration, which also serves as
//! the oracle for the constructors. Equilibrium membership is decided exactly:
//! floating-point comparisons that land within a small band of zero are
//! re-evaluated in rational arithmetic.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{prize_value, rational, Exact};
use crate::model::{AuctionInstance, DiscreteAssignment};

pub const PLAYER_STRATEGY_LIMIT: u128 = 1_000_000;
pub const JOINT_PROFILE_LIMIT: u128 = 10_000_000;

/// Number of distinct ticket placements for one player.
///
/// With `dedup`, tickets of identical weight are interchangeable and only the
/// multiset of their items counts.
pub fn strategy_count(tickets: &[f64], items: usize, dedup: bool) -> u128 {
    let m = items as u128;
    if !dedup {
        return (0..tickets.len()).fold(1u128, |acc, _| acc.saturating_mul(m));
    }
    ticket_groups(tickets)
        .iter()
        .map(|g| multisets(g.len() as u128, m))
        .fold(1u128, |acc, c| acc.saturating_mul(c))
}

/// `C(k + m - 1, m - 1)`, saturating.
fn multisets(k: u128, m: u128) -> u128 {
    if m == 0 {
        return if k == 0 { 1 } else { 0 };
    }
    let r = (m - 1).min(k);
    let mut c: u128 = 1;
    for i in 0..r {
        let top = k + m - 1 - i;
        c = match c.checked_mul(top) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Ticket indices grouped by identical weight, groups ordered by weight.
fn ticket_groups(tickets: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..tickets.len()).collect();
    order.sort_by(|&a, &b| tickets[a].total_cmp(&tickets[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for t in order {
        match groups.last_mut() {
            Some(g) if tickets[g[0]] == tickets[t] => g.push(t),
            _ => groups.push(vec![t]),
        }
    }
    groups
}

/// Iterator over one player's ticket-to-item maps, in odometer order.
#[derive(Debug, Clone)]
pub struct PlayerStrategies {
    /// Original ticket index at each odometer position.
    slots: Vec<usize>,
    /// Whether a position continues the equal-weight run of its predecessor.
    tied: Vec<bool>,
    state: Vec<usize>,
    items: usize,
    done: bool,
}

impl PlayerStrategies {
    fn new(tickets: &[f64], items: usize, dedup: bool) -> Self {
        let groups = if dedup {
            ticket_groups(tickets)
        } else {
            (0..tickets.len()).map(|t| vec![t]).collect()
        };
        let mut slots = Vec::with_capacity(tickets.len());
        let mut tied = Vec::with_capacity(tickets.len());
        for g in groups {
            for (k, t) in g.into_iter().enumerate() {
                slots.push(t);
                tied.push(k > 0);
            }
        }
        let state = vec![0; slots.len()];
        Self { slots, tied, state, items, done: items == 0 }
    }

    fn emit(&self) -> Vec<usize> {
        let mut out = vec![0; self.slots.len()];
        for (p, &t) in self.slots.iter().enumerate() {
            out[t] = self.state[p];
        }
        out
    }
}

impl Iterator for PlayerStrategies {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.emit();
        match (0..self.state.len()).rev().find(|&p| self.state[p] + 1 < self.items) {
            None => self.done = true,
            Some(p) => {
                self.state[p] += 1;
                for q in p + 1..self.state.len() {
                    self.state[q] = if self.tied[q] { self.state[q - 1] } else { 0 };
                }
            }
        }
        Some(current)
    }
}

fn tickets_of(inst: &AuctionInstance, player: usize) -> Result<&[f64]> {
    inst.players[player]
        .budget
        .tickets()
        .ok_or(Error::WrongBudgetKind { expected: "discrete" })
}

/// All placements of `player`'s tickets; fails beyond [`PLAYER_STRATEGY_LIMIT`].
pub fn enumerate_player_strategies(inst: &AuctionInstance, player: usize, dedup: bool) -> Result<PlayerStrategies> {
    if player >= inst.n() {
        return Err(Error::DimensionMismatch(format!("player {player} of {}", inst.n())));
    }
    let tickets = tickets_of(inst, player)?;
    let count = strategy_count(tickets, inst.m(), dedup);
    if count > PLAYER_STRATEGY_LIMIT {
        return Err(Error::ExplosionGuard { what: "player strategies", count, limit: PLAYER_STRATEGY_LIMIT });
    }
    Ok(PlayerStrategies::new(tickets, inst.m(), dedup))
}

/// Per-player strategy lists with precomputed item loads, plus the exact
/// inputs needed to settle close comparisons.
pub(crate) struct DeviationOracle<'a> {
    inst: &'a AuctionInstance,
    pub(crate) strategies: Vec<Vec<Vec<usize>>>,
    loads: Vec<Vec<Vec<f64>>>,
    values: Vec<Vec<BigRational>>,
    delta: Vec<BigRational>,
    tickets: Vec<Vec<BigRational>>,
}

pub(crate) struct Improvement {
    pub gap: f64,
    pub exact_gap: Option<BigRational>,
    /// Index of a best strategy (the current one when nothing improves).
    pub best: usize,
}

impl<'a> DeviationOracle<'a> {
    pub(crate) fn new(inst: &'a AuctionInstance) -> Result<Self> {
        inst.ensure_valid()?;
        if !inst.all_discrete() {
            return Err(Error::WrongBudgetKind { expected: "discrete" });
        }
        let m = inst.m();
        let mut strategies = Vec::with_capacity(inst.n());
        let mut loads = Vec::with_capacity(inst.n());
        for i in 0..inst.n() {
            let weights = tickets_of(inst, i)?;
            let list: Vec<Vec<usize>> = enumerate_player_strategies(inst, i, true)?.collect();
            let l = list
                .iter()
                .map(|s| {
                    let mut load = vec![0.0; m];
                    for (&w, &j) in weights.iter().zip(s) {
                        load[j] += w;
                    }
                    load
                })
                .collect();
            strategies.push(list);
            loads.push(l);
        }
        let values = inst
            .players
            .iter()
            .map(|p| p.valuations.iter().map(|&v| rational(v)).collect())
            .collect();
        let delta = inst.delta.iter().map(|&d| rational(d)).collect();
        let tickets = (0..inst.n())
            .map(|i| tickets_of(inst, i).map(|t| t.iter().map(|&w| rational(w)).collect()))
            .collect::<Result<_>>()?;
        Ok(Self { inst, strategies, loads, values, delta, tickets })
    }

    pub(crate) fn joint_count(&self) -> u128 {
        self.strategies.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    /// Strategy index of a concrete assignment row (up to equal-weight swaps).
    pub(crate) fn index_of(&self, player: usize, items: &[usize]) -> Result<usize> {
        let m = self.inst.m();
        let weights = tickets_of(self.inst, player)?;
        if items.len() != weights.len() || items.iter().any(|&j| j >= m) {
            return Err(Error::DimensionMismatch(format!("assignment row of player {player} does not fit")));
        }
        let canonical = canonicalize(weights, items);
        self.strategies[player]
            .iter()
            .position(|s| canonicalize(weights, s) == canonical)
            .ok_or_else(|| Error::DimensionMismatch(format!("no strategy matches player {player}")))
    }

    fn exact_load(&self, player: usize, strategy: usize) -> Vec<BigRational> {
        let mut load = vec![BigRational::zero(); self.inst.m()];
        for (w, &j) in self.tickets[player].iter().zip(&self.strategies[player][strategy]) {
            load[j] += w;
        }
        load
    }

    /// Largest gain available to `player` by moving its tickets, all others fixed.
    pub(crate) fn improvement(&self, player: usize, choice: &[usize], exact_gap: bool) -> Improvement {
        let inst = self.inst;
        let m = inst.m();
        let v = &inst.players[player].valuations;
        let mut opposing = inst.delta.clone();
        for (k, &s) in choice.iter().enumerate() {
            if k != player {
                for (o, l) in opposing.iter_mut().zip(&self.loads[k][s]) {
                    *o += l;
                }
            }
        }
        let prize = |load: &[f64]| -> f64 {
            (0..m)
                .map(|j| {
                    let t = opposing[j] + load[j];
                    if t > 0.0 {
                        load[j] * v[j] / t
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        let current_strategy = choice[player];
        let current = prize(&self.loads[player][current_strategy]);
        let diffs: Vec<f64> = self.loads[player].iter().map(|l| prize(l) - current).collect();
        let (best, max_diff) = diffs
            .iter()
            .enumerate()
            .fold((current_strategy, 0.0), |acc, (s, &d)| if d > acc.1 { (s, d) } else { acc });
        let tol = 1e-9 * (1.0 + v.iter().sum::<f64>());
        if max_diff > tol && !exact_gap {
            return Improvement { gap: max_diff, exact_gap: None, best };
        }

        let mut opposing_exact = self.delta.clone();
        for (k, &s) in choice.iter().enumerate() {
            if k != player {
                for (o, l) in opposing_exact.iter_mut().zip(self.exact_load(k, s)) {
                    *o += l;
                }
            }
        }
        let exact_prize = |s: usize| prize_value(&self.values[player], &opposing_exact, &self.exact_load(player, s));
        let base = exact_prize(current_strategy);
        let mut best_exact = (current_strategy, BigRational::zero());
        for (s, &d) in diffs.iter().enumerate() {
            if d >= max_diff - 2.0 * tol && s != current_strategy {
                let gain = exact_prize(s) - &base;
                if gain > best_exact.1 {
                    best_exact = (s, gain);
                }
            }
        }
        let (best, gain) = best_exact;
        Improvement { gap: Exact(gain.clone()).to_f64(), exact_gap: Some(gain), best }
    }

    fn is_equilibrium(&self, choice: &[usize]) -> bool {
        (0..choice.len()).all(|i| {
            let imp = self.improvement(i, choice, false);
            imp.exact_gap.is_some_and(|g| g.is_zero())
        })
    }

    fn assignment(&self, choice: &[usize]) -> DiscreteAssignment {
        DiscreteAssignment::new(
            choice
                .iter()
                .enumerate()
                .map(|(i, &s)| self.strategies[i][s].clone())
                .collect(),
        )
    }
}

/// Sorted (weight bits, item) pairs: equal for placements that differ only by
/// swapping equal-weight tickets.
fn canonicalize(weights: &[f64], items: &[usize]) -> Vec<(u64, usize)> {
    let mut pairs: Vec<(u64, usize)> = weights.iter().map(|w| w.to_bits()).zip(items.iter().copied()).collect();
    pairs.sort_unstable();
    pairs
}

/// True when the two assignments agree up to swapping equal-weight tickets.
pub fn equivalent_assignments(inst: &AuctionInstance, a: &DiscreteAssignment, b: &DiscreteAssignment) -> bool {
    a.tickets.len() == b.tickets.len()
        && inst.players.iter().zip(a.tickets.iter().zip(&b.tickets)).all(|(p, (ra, rb))| {
            match p.budget.tickets() {
                Some(w) if w.len() == ra.len() && w.len() == rb.len() => canonicalize(w, ra) == canonicalize(w, rb),
                _ => false,
            }
        })
}

/// Every pure equilibrium of a discrete instance, one representative per class
/// of equal-weight ticket swaps, in odometer order (player 0 slowest).
pub fn exhaustive_equilibrium_search(inst: &AuctionInstance) -> Result<Vec<DiscreteAssignment>> {
    let oracle = DeviationOracle::new(inst)?;
    let total = oracle.joint_count();
    if total > JOINT_PROFILE_LIMIT {
        return Err(Error::ExplosionGuard { what: "joint profiles", count: total, limit: JOINT_PROFILE_LIMIT });
    }
    let radices: Vec<usize> = oracle.strategies.iter().map(Vec::len).collect();
    let decode = |mut index: u64| -> Vec<usize> {
        let mut choice = vec![0; radices.len()];
        for (slot, &r) in choice.iter_mut().zip(&radices).rev() {
            *slot = (index % r as u64) as usize;
            index /= r as u64;
        }
        choice
    };
    let found: Vec<Vec<usize>> = (0..total as u64)
        .into_par_iter()
        .filter_map(|idx| {
            let choice = decode(idx);
            oracle.is_equilibrium(&choice).then_some(choice)
        })
        .collect();
    Ok(found.iter().map(|c| oracle.assignment(c)).collect())
}

fn single_ticket_weights(inst: &AuctionInstance) -> Result<Vec<f64>> {
    inst.ensure_valid()?;
    inst.players
        .iter()
        .enumerate()
        .map(|(i, p)| match p.budget.tickets() {
            None => Err(Error::WrongBudgetKind { expected: "discrete" }),
            Some([w]) => Ok(*w),
            Some(_) => Err(Error::MultiTicketPlayer { player: i }),
        })
        .collect()
}

/// Index of the largest score; the lowest index wins ties.
fn argmax(scores: &[BigRational]) -> usize {
    let mut best = 0;
    for (j, s) in scores.iter().enumerate().skip(1) {
        if s.cmp(&scores[best]) == Ordering::Greater {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub player: usize,
    pub ticket: usize,
    pub item: usize,
    /// Expected prize of the chosen basket at the moment of choice.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
    pub assignment: DiscreteAssignment,
}

impl GreedyTrace {
    /// Rebuilds the assignment from the recorded steps.
    pub fn replay(&self) -> DiscreteAssignment {
        let players = self.steps.iter().map(|s| s.player + 1).max().unwrap_or(0);
        let mut tickets = vec![Vec::new(); players];
        for s in &self.steps {
            if tickets[s.player].len() <= s.ticket {
                tickets[s.player].resize(s.ticket + 1, 0);
            }
            tickets[s.player][s.ticket] = s.item;
        }
        DiscreteAssignment::new(tickets)
    }
}

/// Heaviest ticket first, each into the basket where its expected prize
/// `w / (X_j + w) * v_j` is largest.
pub fn greedy_symmetric_players(inst: &AuctionInstance) -> Result<DiscreteAssignment> {
    greedy_symmetric_players_traced(inst).map(|t| t.assignment)
}

pub fn greedy_symmetric_players_traced(inst: &AuctionInstance) -> Result<GreedyTrace> {
    let weights = single_ticket_weights(inst)?;
    if !inst.has_symmetric_valuations() {
        return Err(Error::AsymmetricValuations);
    }
    let values: Vec<BigRational> = inst.players[0].valuations.iter().map(|&v| rational(v)).collect();
    let mut load: Vec<BigRational> = inst.delta.iter().map(|&d| rational(d)).collect();
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));

    let mut items = vec![0usize; inst.n()];
    let mut steps = Vec::with_capacity(inst.n());
    for k in order {
        let w = rational(weights[k]);
        let scores: Vec<BigRational> = values
            .iter()
            .zip(&load)
            .map(|(v, x)| &w / (x + &w) * v)
            .collect();
        let j = argmax(&scores);
        load[j] += &w;
        items[k] = j;
        steps.push(GreedyStep { player: k, ticket: 0, item: j, score: Exact(scores[j].clone()).to_f64() });
    }
    Ok(GreedyTrace { steps, assignment: DiscreteAssignment::single(items) })
}

/// Everybody starts on item 0; players leave for item 1 in ascending order of
/// `w_i v_i0 / v_i1` while the move is strictly profitable, stopping at the
/// first player who declines. `v_i1 = 0` counts as an infinite ratio.
///
/// With unequal ticket weights this sweep alone can end in a profile where an
/// early mover wants to return; [`two_item_asymmetric`] repairs that.
pub fn two_item_sweep(inst: &AuctionInstance) -> Result<DiscreteAssignment> {
    let weights = single_ticket_weights(inst)?;
    if inst.m() != 2 {
        return Err(Error::NotTwoItems { items: inst.m() });
    }
    let ratio = |i: usize| -> f64 {
        let (v0, v1) = (inst.value(i, 0), inst.value(i, 1));
        if v1 == 0.0 {
            f64::INFINITY
        } else {
            weights[i] * v0 / v1
        }
    };
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| ratio(a).total_cmp(&ratio(b)).then(a.cmp(&b)));

    let w: Vec<BigRational> = weights.iter().map(|&x| rational(x)).collect();
    let mut load = [rational(inst.delta[0]) + w.iter().sum::<BigRational>(), rational(inst.delta[1])];
    let mut items = vec![0usize; inst.n()];
    for i in order {
        let stay = &w[i] / &load[0] * rational(inst.value(i, 0));
        let go = &w[i] / (&load[1] + &w[i]) * rational(inst.value(i, 1));
        if go > stay {
            load[0] -= &w[i];
            load[1] += &w[i];
            items[i] = 1;
        } else {
            break;
        }
    }
    Ok(DiscreteAssignment::single(items))
}

/// Pure equilibrium for two items and one ticket per player: the ordered
/// sweep of [`two_item_sweep`] followed by exact better-response moves
/// (lowest player index first) until nobody gains.
pub fn two_item_asymmetric(inst: &AuctionInstance) -> Result<DiscreteAssignment> {
    let start = two_item_sweep(inst)?;
    let oracle = DeviationOracle::new(inst)?;
    let mut choice: Vec<usize> = start
        .tickets
        .iter()
        .enumerate()
        .map(|(i, row)| oracle.index_of(i, row))
        .collect::<Result<_>>()?;
    let limit = 64 * inst.n().max(1).pow(2);
    for _ in 0..=limit {
        let mover = (0..inst.n()).find_map(|i| {
            let imp = oracle.improvement(i, &choice, true);
            imp.exact_gap.filter(|g| !g.is_zero()).map(|_| (i, imp.best))
        });
        match mover {
            None => return Ok(oracle.assignment(&choice)),
            Some((i, s)) => choice[i] = s,
        }
    }
    Err(Error::RepairDidNotSettle { moves: limit })
}

/// Arrival-and-cascade construction for identical single tickets.
///
/// Players arrive in index order and take the item maximizing
/// `v_ij / (n_j + 1)`. After each arrival, while some player on the active
/// item strictly prefers another item, the lowest-index such player moves to
/// its best item, which becomes active.
pub fn arrival_cascade(inst: &AuctionInstance) -> Result<DiscreteAssignment> {
    arrival_cascade_traced(inst).map(|(a, _)| a)
}

/// As [`arrival_cascade`], also returning the number of moves after each arrival.
pub fn arrival_cascade_traced(inst: &AuctionInstance) -> Result<(DiscreteAssignment, Vec<usize>)> {
    let weights = single_ticket_weights(inst)?;
    if weights.iter().any(|&w| w != weights[0]) {
        return Err(Error::UnequalTicketWeights);
    }
    let n = inst.n();
    let m = inst.m();
    let t = rational(weights[0]);
    let delta: Vec<BigRational> = inst.delta.iter().map(|&d| rational(d)).collect();
    let values: Vec<Vec<BigRational>> = inst
        .players
        .iter()
        .map(|p| p.valuations.iter().map(|&v| rational(v)).collect())
        .collect();
    // expected prize with `count` tickets in basket j, own included
    let prize = |i: usize, j: usize, count: usize| -> BigRational {
        let total = &delta[j] + &t * BigRational::from_integer(count.into());
        &values[i][j] * &t / total
    };

    let mut count = vec![0usize; m];
    let mut items: Vec<Option<usize>> = vec![None; n];
    let mut moves_per_arrival = Vec::with_capacity(n);
    for i in 0..n {
        let scores: Vec<BigRational> = (0..m).map(|j| prize(i, j, count[j] + 1)).collect();
        let j = argmax(&scores);
        items[i] = Some(j);
        count[j] += 1;
        let mut active = j;
        let mut moves = 0;
        loop {
            let mover = (0..=i).filter(|&l| items[l] == Some(active)).find_map(|l| {
                let here = prize(l, active, count[active]);
                let others: Vec<usize> = (0..m).filter(|&k| k != active).collect();
                let options: Vec<BigRational> = others.iter().map(|&k| prize(l, k, count[k] + 1)).collect();
                if options.is_empty() {
                    return None;
                }
                let best = argmax(&options);
                (options[best] > here).then_some((l, others[best]))
            });
            let Some((l, k)) = mover else { break };
            items[l] = Some(k);
            count[active] -= 1;
            count[k] += 1;
            active = k;
            moves += 1;
            assert!(moves <= n, "cascade after arrival {i} exceeded {n} moves");
        }
        moves_per_arrival.push(moves);
    }
    let items = items.into_iter().map(|j| j.expect("every player arrived")).collect();
    Ok((DiscreteAssignment::single(items), moves_per_arrival))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::expected_utility_discrete;
    use proptest::prelude::*;

    fn singles(values: Vec<Vec<f64>>, weights: Vec<f64>) -> AuctionInstance {
        AuctionInstance::given_discrete(values, weights.into_iter().map(|w| vec![w]).collect())
    }

    fn contains(inst: &AuctionInstance, list: &[DiscreteAssignment], a: &DiscreteAssignment) -> bool {
        list.iter().any(|b| equivalent_assignments(inst, a, b))
    }

    #[test]
    fn strategy_counts() {
        let inst = AuctionInstance::given_discrete(vec![vec![1.0; 3]], vec![vec![1.0]]);
        assert_eq!(enumerate_player_strategies(&inst, 0, false).unwrap().count(), 3);

        let inst = AuctionInstance::given_discrete(vec![vec![1.0; 2]], vec![vec![1.0; 3]]);
        let dedup: Vec<_> = enumerate_player_strategies(&inst, 0, true).unwrap().collect();
        assert_eq!(dedup, vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 1], vec![1, 1, 1]]);
        assert_eq!(enumerate_player_strategies(&inst, 0, false).unwrap().count(), 8);

        let inst = AuctionInstance::given_discrete(vec![vec![1.0; 2]], vec![vec![1.0, 2.0]]);
        assert_eq!(enumerate_player_strategies(&inst, 0, true).unwrap().count(), 4);
        assert_eq!(enumerate_player_strategies(&inst, 0, false).unwrap().count(), 4);
    }

    #[test]
    fn mixed_groups_enumerate_every_class() {
        // two unit tickets and one heavy ticket over three items: C(4,2) * 3 = 18
        let tickets = vec![1.0, 2.0, 1.0];
        assert_eq!(strategy_count(&tickets, 3, true), 18);
        let inst = AuctionInstance::given_discrete(vec![vec![1.0; 3]], vec![tickets.clone()]);
        let all: Vec<_> = enumerate_player_strategies(&inst, 0, true).unwrap().collect();
        assert_eq!(all.len(), 18);
        let mut classes: Vec<_> = all.iter().map(|s| canonicalize(&tickets, s)).collect();
        classes.sort();
        classes.dedup();
        assert_eq!(classes.len(), 18);
    }

    #[test]
    fn explosion_guard_trips() {
        let inst = AuctionInstance::given_discrete(vec![vec![1.0; 4]], vec![(1..=12).map(f64::from).collect()]);
        assert!(matches!(
            enumerate_player_strategies(&inst, 0, true),
            Err(Error::ExplosionGuard { count: 16_777_216, .. })
        ));
        assert_eq!(strategy_count(&[1.0; 200], 200, false), u128::MAX);
    }

    #[test]
    fn uneven_budgets_have_no_equilibrium() {
        let inst = AuctionInstance::given_discrete(vec![vec![1.0, 1.0]; 2], vec![vec![1.0; 3], vec![1.0]]);
        let oracle = DeviationOracle::new(&inst).unwrap();
        assert_eq!(oracle.joint_count(), 8);
        assert!(exhaustive_equilibrium_search(&inst).unwrap().is_empty());
    }

    #[test]
    fn lone_player_keeps_maximizers() {
        let inst = singles(vec![vec![5.0, 1.0, 5.0]], vec![1.0]);
        let eq = exhaustive_equilibrium_search(&inst).unwrap();
        assert_eq!(eq, vec![DiscreteAssignment::single(vec![0]), DiscreteAssignment::single(vec![2])]);
    }

    #[test]
    fn greedy_example() {
        let inst = singles(vec![vec![4.0, 2.0]; 3], vec![2.0, 1.0, 1.0]);
        let trace = greedy_symmetric_players_traced(&inst).unwrap();
        assert_eq!(trace.assignment, DiscreteAssignment::single(vec![0, 1, 0]));
        assert_eq!(trace.replay(), trace.assignment);
        assert_eq!(trace.steps.iter().map(|s| s.player).collect::<Vec<_>>(), vec![0, 1, 2]);
        let eq = exhaustive_equilibrium_search(&inst).unwrap();
        assert!(contains(&inst, &eq, &trace.assignment));
    }

    #[test]
    fn greedy_trivial_cases() {
        let inst = singles(vec![vec![5.0, 1.0]], vec![1.0]);
        assert_eq!(greedy_symmetric_players(&inst).unwrap(), DiscreteAssignment::single(vec![0]));
        let inst = singles(vec![vec![3.0]; 4], vec![1.0; 4]);
        assert_eq!(greedy_symmetric_players(&inst).unwrap(), DiscreteAssignment::single(vec![0; 4]));
    }

    #[test]
    fn greedy_preconditions() {
        let multi = AuctionInstance::given_discrete(vec![vec![1.0, 1.0]; 2], vec![vec![1.0, 1.0], vec![1.0]]);
        assert!(matches!(greedy_symmetric_players(&multi), Err(Error::MultiTicketPlayer { player: 0 })));
        let asym = singles(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![1.0, 1.0]);
        assert!(matches!(greedy_symmetric_players(&asym), Err(Error::AsymmetricValuations)));
        let cont = AuctionInstance::given(vec![vec![1.0]], vec![1.0]);
        assert!(matches!(greedy_symmetric_players(&cont), Err(Error::WrongBudgetKind { .. })));
    }

    #[test]
    fn two_item_examples() {
        let inst = singles(vec![vec![1.0, 2.0], vec![3.0, 1.0]], vec![1.0, 1.0]);
        let a = two_item_asymmetric(&inst).unwrap();
        assert_eq!(a, DiscreteAssignment::single(vec![1, 0]));
        assert_eq!(expected_utility_discrete(&inst, &a).unwrap(), vec![2.0, 3.0]);
        assert!(contains(&inst, &exhaustive_equilibrium_search(&inst).unwrap(), &a));

        let inst = singles(vec![vec![2.0, 1.0]], vec![1.0]);
        assert_eq!(two_item_asymmetric(&inst).unwrap(), DiscreteAssignment::single(vec![0]));

        let inst = singles(vec![vec![2.0, 0.0], vec![5.0, 0.0]], vec![1.0, 3.0]);
        assert_eq!(two_item_asymmetric(&inst).unwrap(), DiscreteAssignment::single(vec![0, 0]));

        let three = singles(vec![vec![1.0, 1.0, 1.0]], vec![1.0]);
        assert!(matches!(two_item_asymmetric(&three), Err(Error::NotTwoItems { items: 3 })));
    }

    #[test]
    fn sweep_alone_can_leave_a_profitable_return() {
        // Ratios tie at 4 for players 2 and 3; player 2 moves first and later regrets it.
        let inst = singles(
            vec![vec![3.0, 2.0], vec![1.0, 0.0], vec![4.0, 3.0], vec![4.0, 5.0]],
            vec![5.0, 2.0, 3.0, 5.0],
        );
        let swept = two_item_sweep(&inst).unwrap();
        assert_eq!(swept, DiscreteAssignment::single(vec![0, 0, 1, 1]));
        let eq = exhaustive_equilibrium_search(&inst).unwrap();
        assert!(!contains(&inst, &eq, &swept));
        let repaired = two_item_asymmetric(&inst).unwrap();
        assert!(contains(&inst, &eq, &repaired));
    }

    #[test]
    fn cascade_examples() {
        let inst = singles(vec![vec![3.0, 1.0]; 2], vec![1.0, 1.0]);
        let a = arrival_cascade(&inst).unwrap();
        assert_eq!(a, DiscreteAssignment::single(vec![0, 0]));
        assert_eq!(expected_utility_discrete(&inst, &a).unwrap(), vec![1.5, 1.5]);

        let inst = singles(vec![vec![3.0, 1.0], vec![1.0, 3.0]], vec![1.0, 1.0]);
        let (a, moves) = arrival_cascade_traced(&inst).unwrap();
        assert_eq!(a, DiscreteAssignment::single(vec![0, 1]));
        assert_eq!(moves, vec![0, 0]);

        let inst = singles(vec![vec![1.0, 4.0, 2.0]], vec![1.0]);
        assert_eq!(arrival_cascade(&inst).unwrap(), DiscreteAssignment::single(vec![1]));

        let uneven = singles(vec![vec![1.0], vec![1.0]], vec![1.0, 2.0]);
        assert!(matches!(arrival_cascade(&uneven), Err(Error::UnequalTicketWeights)));
    }

    #[test]
    fn cascade_fires_on_crowding() {
        // Player 1 arrives on item 0 and pushes player 0 to its second choice.
        let inst = singles(vec![vec![4.0, 3.0], vec![4.0, 1.0], vec![4.0, 1.0]], vec![1.0; 3]);
        let (a, moves) = arrival_cascade_traced(&inst).unwrap();
        assert_eq!(moves, vec![0, 1, 0]);
        assert_eq!(a, DiscreteAssignment::single(vec![1, 0, 0]));
        assert!(contains(&inst, &exhaustive_equilibrium_search(&inst).unwrap(), &a));
    }

    fn small_singles(symmetric: bool, unit: bool, two_items: bool) -> impl Strategy<Value = AuctionInstance> {
        let m = if two_items { Just(2usize).boxed() } else { (1usize..5).boxed() };
        (1usize..6, m).prop_flat_map(move |(n, m)| {
            (
                prop::collection::vec(prop::collection::vec(prop_oneof![Just(0u8), 1u8..10], m), n),
                prop::collection::vec(1u8..6, n),
            )
                .prop_map(move |(v, w)| {
                    let rows: Vec<Vec<f64>> = v
                        .iter()
                        .map(|r| r.iter().map(|&x| f64::from(x)).collect())
                        .collect();
                    let rows = if symmetric { vec![rows[0].clone(); rows.len()] } else { rows };
                    let weights = w.iter().map(|&x| if unit { 1.0 } else { f64::from(x) }).collect();
                    singles(rows, weights)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn greedy_output_is_an_equilibrium(inst in small_singles(true, false, false)) {
            let a = greedy_symmetric_players(&inst).unwrap();
            prop_assert!(contains(&inst, &exhaustive_equilibrium_search(&inst).unwrap(), &a));
            // no player k at i gains w/(X_j + w) v_j over w/X_i v_i
            let v = &inst.players[0].valuations;
            let x = a.weight_profile(&inst).unwrap();
            let load: Vec<f64> = (0..inst.m()).map(|j| x.rows.iter().map(|r| r[j]).sum()).collect();
            for (k, row) in a.tickets.iter().enumerate() {
                let w = inst.budget(k);
                let i = row[0];
                for j in (0..inst.m()).filter(|&j| j != i) {
                    prop_assert!(w / (load[j] + w) * v[j] <= w / load[i] * v[i] * (1.0 + 1e-12));
                }
            }
        }

        #[test]
        fn two_item_output_is_an_equilibrium(inst in small_singles(false, false, true)) {
            let a = two_item_asymmetric(&inst).unwrap();
            prop_assert!(contains(&inst, &exhaustive_equilibrium_search(&inst).unwrap(), &a));
        }

        #[test]
        fn cascade_output_is_an_equilibrium(inst in small_singles(false, true, false)) {
            let (a, moves) = arrival_cascade_traced(&inst).unwrap();
            prop_assert!(moves.iter().all(|&k| k <= inst.n()));
            prop_assert!(contains(&inst, &exhaustive_equilibrium_search(&inst).unwrap(), &a));
        }
    }
}
