//! Auction instances, strategy profiles and expected-utility semantics.
//!
//! Every item has a basket. Player `i` places weight `x[i][j] >= 0` in the
//! basket of item `j`; the auctioneer may place a fixed weight `delta[j]`.
//! One unit of weight is drawn from each basket with probability proportional
//! to its size, and the item goes to the owner of the drawn weight. A basket
//! that received nothing at all is kept by the auctioneer.
//!
//! In [`Mode::Given`] the weight is an endowment that must be spent in full.
//! In [`Mode::Costly`] every unit of weight costs one unit of utility and there
//! is no budget, so a sensible bid on item `j` never exceeds `v[i][j]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for budget balance of continuous profiles.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Row tolerance when deciding whether all players share one valuation vector.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Tickets are endowed; each player spends exactly its budget.
    Given,
    /// Tickets cost one unit of utility per unit of weight.
    Costly,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Given => f.write_str("given"),
            Mode::Costly => f.write_str("costly"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Budget {
    /// Arbitrarily divisible weight `w`. Ignored in costly mode.
    Continuous(f64),
    /// Indivisible tickets; the budget is their sum.
    Discrete(Vec<f64>),
}

impl Budget {
    pub fn total(&self) -> f64 {
        match self {
            Budget::Continuous(w) => *w,
            Budget::Discrete(tickets) => tickets.iter().sum(),
        }
    }

    pub fn tickets(&self) -> Option<&[f64]> {
        match self {
            Budget::Continuous(_) => None,
            Budget::Discrete(t) => Some(t),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Budget::Discrete(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub valuations: Vec<f64>,
    pub budget: Budget,
}

/// A complete auction: players, items, auctioneer tickets and cost regime.
///
/// Construct through the helpers ([`AuctionInstance::given`],
/// [`AuctionInstance::costly`], [`AuctionInstance::given_discrete`]) or by
/// deserializing the JSON instance format. Construction does not validate;
/// every solver calls [`AuctionInstance::ensure_valid`] on entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct AuctionInstance {
    pub mode: Mode,
    pub items: usize,
    pub delta: Vec<f64>,
    pub players: Vec<Player>,
}

impl AuctionInstance {
    /// Given-ticket instance with continuous budgets.
    pub fn given(valuations: Vec<Vec<f64>>, budgets: Vec<f64>) -> Self {
        let items = valuations.first().map_or(0, Vec::len);
        let players = valuations
            .into_iter()
            .zip(budgets)
            .map(|(valuations, w)| Player { valuations, budget: Budget::Continuous(w) })
            .collect();
        Self { mode: Mode::Given, items, delta: vec![0.0; items], players }
    }

    /// Costly-ticket instance with continuous (uncapped) bids.
    pub fn costly(valuations: Vec<Vec<f64>>) -> Self {
        let items = valuations.first().map_or(0, Vec::len);
        let players = valuations
            .into_iter()
            .map(|valuations| Player { valuations, budget: Budget::Continuous(0.0) })
            .collect();
        Self { mode: Mode::Costly, items, delta: vec![0.0; items], players }
    }

    /// Given-ticket instance where every player holds indivisible tickets.
    pub fn given_discrete(valuations: Vec<Vec<f64>>, tickets: Vec<Vec<f64>>) -> Self {
        let items = valuations.first().map_or(0, Vec::len);
        let players = valuations
            .into_iter()
            .zip(tickets)
            .map(|(valuations, t)| Player { valuations, budget: Budget::Discrete(t) })
            .collect();
        Self { mode: Mode::Given, items, delta: vec![0.0; items], players }
    }

    pub fn with_delta(mut self, delta: Vec<f64>) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn m(&self) -> usize {
        self.items
    }

    pub fn value(&self, player: usize, item: usize) -> f64 {
        self.players[player].valuations[item]
    }

    pub fn budget(&self, player: usize) -> f64 {
        self.players[player].budget.total()
    }

    pub fn has_auctioneer_tickets(&self) -> bool {
        self.delta.iter().any(|&d| d > 0.0)
    }

    pub fn all_continuous(&self) -> bool {
        self.players.iter().all(|p| !p.budget.is_discrete())
    }

    pub fn all_discrete(&self) -> bool {
        self.players.iter().all(|p| p.budget.is_discrete())
    }

    /// True when every player's valuation row equals the first row.
    pub fn has_symmetric_valuations(&self) -> bool {
        let Some(first) = self.players.first() else { return true };
        self.players.iter().all(|p| {
            p.valuations
                .iter()
                .zip(&first.valuations)
                .all(|(a, b)| (a - b).abs() <= SYMMETRY_TOLERANCE * (1.0 + a.abs().max(b.abs())))
        })
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<ValidationIssue>> {
        validate_instance(self)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidInstance)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }
}

/// A structural defect found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NoPlayers,
    NoItems,
    ValuationLength { player: usize, found: usize, expected: usize },
    DeltaLength { found: usize, expected: usize },
    NegativeValuation { player: usize, item: usize },
    NegativeBudget { player: usize },
    EmptyTickets { player: usize },
    NonpositiveTicket { player: usize, ticket: usize },
    NegativeDelta { item: usize },
    NonFinite { what: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue::*;
        match self {
            NoPlayers => write!(f, "instance has no players"),
            NoItems => write!(f, "instance has no items"),
            ValuationLength { player, found, expected } => write!(
                f,
                "player {player} lists {found} valuations, expected {expected}"
            ),
            DeltaLength { found, expected } => {
                write!(f, "delta has {found} entries, expected {expected}")
            }
            NegativeValuation { player, item } => {
                write!(f, "negative valuation for player {player} on item {item}")
            }
            NegativeBudget { player } => write!(f, "negative budget for player {player}"),
            EmptyTickets { player } => write!(f, "player {player} has an empty ticket list"),
            NonpositiveTicket { player, ticket } => {
                write!(f, "nonpositive ticket {ticket} of player {player}")
            }
            NegativeDelta { item } => write!(f, "negative auctioneer ticket on item {item}"),
            NonFinite { what } => write!(f, "non-finite {what}"),
        }
    }
}

/// Collects every structural invariant the instance violates.
pub fn validate_instance(inst: &AuctionInstance) -> std::result::Result<(), Vec<ValidationIssue>> {
    let mut issues = Vec::new();
    let m = inst.items;
    if inst.players.is_empty() {
        issues.push(ValidationIssue::NoPlayers);
    }
    if m == 0 {
        issues.push(ValidationIssue::NoItems);
    }
    if inst.delta.len() != m {
        issues.push(ValidationIssue::DeltaLength { found: inst.delta.len(), expected: m });
    }
    for (j, &d) in inst.delta.iter().enumerate() {
        if !d.is_finite() {
            issues.push(ValidationIssue::NonFinite { what: format!("auctioneer ticket on item {j}") });
        } else if d < 0.0 {
            issues.push(ValidationIssue::NegativeDelta { item: j });
        }
    }
    for (i, p) in inst.players.iter().enumerate() {
        if p.valuations.len() != m {
            issues.push(ValidationIssue::ValuationLength {
                player: i,
                found: p.valuations.len(),
                expected: m,
            });
        }
        for (j, &v) in p.valuations.iter().enumerate() {
            if !v.is_finite() {
                issues.push(ValidationIssue::NonFinite { what: format!("valuation of player {i} on item {j}") });
            } else if v < 0.0 {
                issues.push(ValidationIssue::NegativeValuation { player: i, item: j });
            }
        }
        match &p.budget {
            Budget::Continuous(w) => {
                if !w.is_finite() {
                    issues.push(ValidationIssue::NonFinite { what: format!("budget of player {i}") });
                } else if *w < 0.0 {
                    issues.push(ValidationIssue::NegativeBudget { player: i });
                }
            }
            Budget::Discrete(tickets) => {
                if tickets.is_empty() {
                    issues.push(ValidationIssue::EmptyTickets { player: i });
                }
                for (t, &weight) in tickets.iter().enumerate() {
                    if !weight.is_finite() {
                        issues.push(ValidationIssue::NonFinite { what: format!("ticket {t} of player {i}") });
                    } else if weight <= 0.0 {
                        issues.push(ValidationIssue::NonpositiveTicket { player: i, ticket: t });
                    }
                }
            }
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

/// Weight placed by each player on each item, row-major (`x[i][j]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContinuousProfile {
    pub rows: Vec<Vec<f64>>,
}

impl ContinuousProfile {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self { rows: vec![vec![0.0; m]; n] }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &ContinuousProfile) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Item chosen for every ticket of every player (`tickets[i][t]`, 0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteAssignment {
    pub tickets: Vec<Vec<usize>>,
}

impl DiscreteAssignment {
    pub fn new(tickets: Vec<Vec<usize>>) -> Self {
        Self { tickets }
    }

    /// One ticket per player, placed on the given items.
    pub fn single(items: Vec<usize>) -> Self {
        Self { tickets: items.into_iter().map(|j| vec![j]).collect() }
    }

    /// Per-(player, item) weight totals.
    pub fn weight_profile(&self, inst: &AuctionInstance) -> Result<ContinuousProfile> {
        if self.tickets.len() != inst.n() {
            return Err(Error::DimensionMismatch(format!(
                "assignment covers {} players, instance has {}",
                self.tickets.len(),
                inst.n()
            )));
        }
        let mut rows = vec![vec![0.0; inst.m()]; inst.n()];
        for (i, (player, items)) in inst.players.iter().zip(&self.tickets).enumerate() {
            let weights = player.budget.tickets().ok_or(Error::WrongBudgetKind { expected: "discrete" })?;
            if weights.len() != items.len() {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} holds {} tickets but {} are assigned",
                    weights.len(),
                    items.len()
                )));
            }
            for (&w, &j) in weights.iter().zip(items) {
                if j >= inst.m() {
                    return Err(Error::DimensionMismatch(format!("player {i} uses item {j} of {}", inst.m())));
                }
                rows[i][j] += w;
            }
        }
        Ok(ContinuousProfile { rows })
    }
}

/// Probability that each player (and the auctioneer) takes each item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinProbabilities {
    pub sigma: Vec<Vec<f64>>,
    pub auctioneer_share: Vec<f64>,
}

fn check_dims(inst: &AuctionInstance, x: &ContinuousProfile) -> Result<()> {
    if x.rows.len() != inst.n() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} rows, instance has {} players",
            x.rows.len(),
            inst.n()
        )));
    }
    if let Some((i, row)) = x.rows.iter().enumerate().find(|(_, r)| r.len() != inst.m()) {
        return Err(Error::DimensionMismatch(format!(
            "profile row {i} has {} entries, instance has {} items",
            row.len(),
            inst.m()
        )));
    }
    if inst.delta.len() != inst.m() {
        return Err(Error::DimensionMismatch("delta length differs from item count".into()));
    }
    Ok(())
}

/// Checks that `x` is a legal continuous strategy profile for `inst`.
pub fn check_profile(inst: &AuctionInstance, x: &ContinuousProfile) -> Result<()> {
    check_dims(inst, x)?;
    for (i, row) in x.rows.iter().enumerate() {
        if let Some(j) = row.iter().position(|&y| !(y.is_finite() && y >= 0.0)) {
            return Err(Error::InfeasibleProfile(format!("x[{i}][{j}] = {} is not a nonnegative number", row[j])));
        }
        match inst.mode {
            Mode::Given => {
                let w = inst.budget(i);
                let spent: f64 = row.iter().sum();
                if (spent - w).abs() > BUDGET_TOLERANCE * w.max(1.0) {
                    return Err(Error::InfeasibleProfile(format!(
                        "player {i} spends {spent} of a budget of {w}"
                    )));
                }
            }
            Mode::Costly => {
                for (j, (&y, &v)) in row.iter().zip(&inst.players[i].valuations).enumerate() {
                    if y > v * (1.0 + BUDGET_TOLERANCE) + BUDGET_TOLERANCE {
                        return Err(Error::InfeasibleProfile(format!(
                            "x[{i}][{j}] = {y} exceeds the valuation {v}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// `delta[j]` plus everybody's weight on item `j`.
pub fn item_totals(inst: &AuctionInstance, x: &ContinuousProfile) -> Vec<f64> {
    (0..inst.m())
        .map(|j| inst.delta[j] + x.rows.iter().map(|r| r[j]).sum::<f64>())
        .collect()
}

/// Weight facing player `i` on every item: auctioneer tickets plus all other players.
pub fn opposing_totals(inst: &AuctionInstance, x: &ContinuousProfile, player: usize) -> Vec<f64> {
    (0..inst.m())
        .map(|j| {
            inst.delta[j]
                + x.rows
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != player)
                    .map(|(_, r)| r[j])
                    .sum::<f64>()
        })
        .collect()
}

/// Expected prize value of a single basket: `y v / (a + y)`, or 0 for an empty basket.
#[inline]
pub fn basket_value(value: f64, opposing: f64, own: f64) -> f64 {
    let total = opposing + own;
    if total > 0.0 {
        own * value / total
    } else {
        0.0
    }
}

/// Utility of one player placing `own` against fixed opposing weights.
pub fn player_utility(mode: Mode, valuations: &[f64], opposing: &[f64], own: &[f64]) -> f64 {
    valuations
        .iter()
        .zip(opposing)
        .zip(own)
        .map(|((&v, &a), &y)| {
            let prize = basket_value(v, a, y);
            match mode {
                Mode::Given => prize,
                Mode::Costly => prize - y,
            }
        })
        .sum()
}

pub fn win_probabilities(inst: &AuctionInstance, x: &ContinuousProfile) -> Result<WinProbabilities> {
    check_dims(inst, x)?;
    let totals = item_totals(inst, x);
    let sigma = x
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(&totals)
                .map(|(&y, &t)| if t > 0.0 { y / t } else { 0.0 })
                .collect()
        })
        .collect();
    let auctioneer_share = inst
        .delta
        .iter()
        .zip(&totals)
        .map(|(&d, &t)| if t > 0.0 { d / t } else { 0.0 })
        .collect();
    Ok(WinProbabilities { sigma, auctioneer_share })
}

pub fn win_probabilities_discrete(inst: &AuctionInstance, a: &DiscreteAssignment) -> Result<WinProbabilities> {
    win_probabilities(inst, &a.weight_profile(inst)?)
}

/// Expected utility of every player under `x`.
///
/// Given mode: `sum_j sigma_ij v_ij`. Costly mode: `sum_j (sigma_ij v_ij - x_ij)`.
pub fn expected_utility(inst: &AuctionInstance, x: &ContinuousProfile) -> Result<Vec<f64>> {
    check_dims(inst, x)?;
    let totals = item_totals(inst, x);
    Ok(x.rows
        .iter()
        .zip(&inst.players)
        .map(|(row, p)| {
            row.iter()
                .zip(&totals)
                .zip(&p.valuations)
                .map(|((&y, &t), &v)| {
                    let prize = if t > 0.0 { y / t * v } else { 0.0 };
                    match inst.mode {
                        Mode::Given => prize,
                        Mode::Costly => prize - y,
                    }
                })
                .sum()
        })
        .collect())
}

/// Expected utility under a ticket assignment. In costly mode the whole
/// ticket stock `w_i` is paid.
pub fn expected_utility_discrete(inst: &AuctionInstance, a: &DiscreteAssignment) -> Result<Vec<f64>> {
    expected_utility(inst, &a.weight_profile(inst)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlayerRepr {
    valuations: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tickets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceRepr {
    mode: Mode,
    items: usize,
    #[serde(default)]
    delta: Vec<f64>,
    players: Vec<PlayerRepr>,
}

impl TryFrom<InstanceRepr> for AuctionInstance {
    type Error = String;

    fn try_from(repr: InstanceRepr) -> std::result::Result<Self, String> {
        let mut players = Vec::with_capacity(repr.players.len());
        for (i, p) in repr.players.into_iter().enumerate() {
            let budget = match (p.budget, p.tickets) {
                (Some(_), Some(_)) => return Err(format!("player {i} has both a budget and tickets")),
                (Some(w), None) => Budget::Continuous(w),
                (None, Some(t)) => Budget::Discrete(t),
                (None, None) if repr.mode == Mode::Costly => Budget::Continuous(0.0),
                (None, None) => return Err(format!("player {i} needs a budget or tickets")),
            };
            players.push(Player { valuations: p.valuations, budget });
        }
        let delta = if repr.delta.is_empty() { vec![0.0; repr.items] } else { repr.delta };
        Ok(AuctionInstance { mode: repr.mode, items: repr.items, delta, players })
    }
}

impl From<AuctionInstance> for InstanceRepr {
    fn from(inst: AuctionInstance) -> Self {
        let mode = inst.mode;
        let players = inst
            .players
            .into_iter()
            .map(|p| match p.budget {
                Budget::Continuous(_) if mode == Mode::Costly => {
                    PlayerRepr { valuations: p.valuations, budget: None, tickets: None }
                }
                Budget::Continuous(w) => PlayerRepr { valuations: p.valuations, budget: Some(w), tickets: None },
                Budget::Discrete(t) => PlayerRepr { valuations: p.valuations, budget: None, tickets: Some(t) },
            })
            .collect();
        InstanceRepr { mode, items: inst.items, delta: inst.delta, players }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn well_formed_instance_validates() {
        let inst = AuctionInstance::given(vec![vec![1.0, 3.0], vec![1.0, 3.0]], vec![1.0, 1.0]);
        assert!(inst.validate().is_ok());
    }

    #[test]
    fn negative_valuation_is_reported() {
        let inst = AuctionInstance::given(vec![vec![-1.0, 3.0], vec![1.0, 3.0]], vec![1.0, 1.0]);
        let issues = inst.validate().unwrap_err();
        assert_eq!(issues, vec![ValidationIssue::NegativeValuation { player: 0, item: 0 }]);
        assert!(issues[0].to_string().contains("negative valuation"));
    }

    #[test]
    fn zero_ticket_is_reported() {
        let inst = AuctionInstance::given_discrete(vec![vec![1.0, 1.0]], vec![vec![1.0, 0.0]]);
        let issues = inst.validate().unwrap_err();
        assert_eq!(issues, vec![ValidationIssue::NonpositiveTicket { player: 0, ticket: 1 }]);
        assert!(issues[0].to_string().contains("nonpositive ticket"));
    }

    #[test]
    fn every_issue_is_collected() {
        let mut inst = AuctionInstance::given(vec![vec![1.0, -2.0], vec![1.0]], vec![-1.0, 1.0]);
        inst.delta = vec![-0.5];
        let issues = inst.validate().unwrap_err();
        assert!(issues.contains(&ValidationIssue::DeltaLength { found: 1, expected: 2 }));
        assert!(issues.contains(&ValidationIssue::NegativeDelta { item: 0 }));
        assert!(issues.contains(&ValidationIssue::NegativeValuation { player: 0, item: 1 }));
        assert!(issues.contains(&ValidationIssue::NegativeBudget { player: 0 }));
        assert!(issues.contains(&ValidationIssue::ValuationLength { player: 1, found: 1, expected: 2 }));
        let empty = AuctionInstance::given(vec![], vec![]);
        let issues = empty.validate().unwrap_err();
        assert!(issues.contains(&ValidationIssue::NoPlayers));
        assert!(issues.contains(&ValidationIssue::NoItems));
    }

    #[test]
    fn split_basket_is_even() {
        let inst = AuctionInstance::given(vec![vec![6.0, 1.0], vec![6.0, 1.0]], vec![1.0, 1.0]);
        let x = ContinuousProfile::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let p = win_probabilities(&inst, &x).unwrap();
        assert_eq!(p.sigma[0][0], 0.5);
        assert_eq!(p.sigma[1][0], 0.5);
        // nobody bid on item 2
        assert_eq!(p.sigma[0][1], 0.0);
        assert_eq!(p.sigma[1][1], 0.0);
        assert_eq!(p.auctioneer_share[1], 0.0);
        assert_eq!(expected_utility(&inst, &x).unwrap()[0], 3.0);
    }

    #[test]
    fn auctioneer_ticket_takes_its_share() {
        let inst = AuctionInstance::given(vec![vec![1.0], vec![1.0]], vec![1.0, 1.0]).with_delta(vec![2.0]);
        let x = ContinuousProfile::new(vec![vec![1.0], vec![1.0]]);
        let p = win_probabilities(&inst, &x).unwrap();
        assert_eq!(p.sigma[0][0], 0.25);
        assert_eq!(p.sigma[1][0], 0.25);
        assert_eq!(p.auctioneer_share[0], 0.5);
    }

    #[test]
    fn costly_symmetric_profile_utility() {
        let inst = AuctionInstance::costly(vec![vec![4.0, 8.0], vec![4.0, 8.0]]);
        let x = ContinuousProfile::new(vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        let u = expected_utility(&inst, &x).unwrap();
        assert_eq!(u, vec![3.0, 3.0]);
    }

    #[test]
    fn lone_bidder_takes_item() {
        let inst = AuctionInstance::given(vec![vec![5.0, 2.0], vec![0.0, 2.0]], vec![1e-9, 1.0]);
        let x = ContinuousProfile::new(vec![vec![1e-9, 0.0], vec![0.0, 1.0]]);
        let u = expected_utility(&inst, &x).unwrap();
        assert_eq!(u[0], 5.0);
        assert_eq!(u[1], 2.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let inst = AuctionInstance::given(vec![vec![1.0, 1.0]], vec![1.0]);
        let x = ContinuousProfile::new(vec![vec![1.0]]);
        assert!(matches!(expected_utility(&inst, &x), Err(Error::DimensionMismatch(_))));
        assert!(matches!(win_probabilities(&inst, &x), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn profile_feasibility() {
        let inst = AuctionInstance::given(vec![vec![1.0, 1.0]], vec![1.0]);
        assert!(check_profile(&inst, &ContinuousProfile::new(vec![vec![0.25, 0.75]])).is_ok());
        assert!(check_profile(&inst, &ContinuousProfile::new(vec![vec![0.25, 0.5]])).is_err());
        assert!(check_profile(&inst, &ContinuousProfile::new(vec![vec![-0.25, 1.25]])).is_err());
        let costly = AuctionInstance::costly(vec![vec![1.0, 2.0]]);
        assert!(check_profile(&costly, &ContinuousProfile::new(vec![vec![1.0, 0.5]])).is_ok());
        assert!(check_profile(&costly, &ContinuousProfile::new(vec![vec![1.5, 0.5]])).is_err());
    }

    #[test]
    fn zero_budget_player_is_inert() {
        let inst = AuctionInstance::given(vec![vec![1.0], vec![1.0]], vec![0.0, 1.0]);
        assert!(inst.validate().is_ok());
        let x = ContinuousProfile::new(vec![vec![0.0], vec![1.0]]);
        assert!(check_profile(&inst, &x).is_ok());
        assert_eq!(expected_utility(&inst, &x).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let text = r#"{"mode":"given","items":2,"players":[
            {"valuations":[1,3],"budget":2},
            {"valuations":[1,3],"tickets":[0.5,0.5]}]}"#;
        let inst = AuctionInstance::from_json(text).unwrap();
        assert_eq!(inst.delta, vec![0.0, 0.0]);
        assert_eq!(inst.players[0].budget, Budget::Continuous(2.0));
        assert_eq!(inst.players[1].budget, Budget::Discrete(vec![0.5, 0.5]));
        let back = AuctionInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);

        let costly = r#"{"mode":"costly","items":1,"delta":[0.1],"players":[{"valuations":[2]}]}"#;
        let inst = AuctionInstance::from_json(costly).unwrap();
        assert_eq!(inst.mode, Mode::Costly);
        assert!(!inst.to_json().contains("budget"));

        let missing = r#"{"mode":"given","items":1,"players":[{"valuations":[2]}]}"#;
        assert!(AuctionInstance::from_json(missing).is_err());
        let both = r#"{"mode":"given","items":1,"players":[{"valuations":[2],"budget":1,"tickets":[1]}]}"#;
        assert!(AuctionInstance::from_json(both).is_err());
    }

    #[test]
    fn profiles_serialize_row_major() {
        let x = ContinuousProfile::new(vec![vec![0.5, 1.5], vec![0.25, 0.75]]);
        assert_eq!(serde_json::to_string(&x).unwrap(), "[[0.5,1.5],[0.25,0.75]]");
        let a = DiscreteAssignment::new(vec![vec![0, 0, 1], vec![1]]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[0,0,1],[1]]");
    }

    fn instance_and_profile() -> impl Strategy<Value = (AuctionInstance, ContinuousProfile)> {
        (1usize..5, 1usize..5).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..10.0, m), n),
                prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..3.0], m), n),
                prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..2.0], m),
                prop::bool::ANY,
            )
                .prop_map(|(v, x, delta, costly)| {
                    let budgets = x.iter().map(|r| r.iter().sum()).collect();
                    let inst = AuctionInstance::given(v, budgets).with_delta(delta);
                    let inst = if costly { inst.with_mode(Mode::Costly) } else { inst };
                    (inst, ContinuousProfile::new(x))
                })
        })
    }

    proptest! {
        #[test]
        fn probability_is_conserved((inst, x) in instance_and_profile()) {
            let p = win_probabilities(&inst, &x).unwrap();
            let totals = item_totals(&inst, &x);
            for j in 0..inst.m() {
                let mass: f64 = p.sigma.iter().map(|r| r[j]).sum::<f64>() + p.auctioneer_share[j];
                if totals[j] > 0.0 {
                    prop_assert!((mass - 1.0).abs() <= 1e-12);
                } else {
                    prop_assert_eq!(mass, 0.0);
                }
                for row in &p.sigma {
                    prop_assert!((0.0..=1.0).contains(&row[j]));
                }
            }
        }

        #[test]
        fn own_weight_never_hurts_win_chance((inst, x) in instance_and_profile(), bump in 0.0f64..2.0) {
            let before = win_probabilities(&inst, &x).unwrap();
            let mut y = x.clone();
            y.rows[0][0] += bump;
            let after = win_probabilities(&inst, &y).unwrap();
            prop_assert!(after.sigma[0][0] >= before.sigma[0][0] - 1e-15);
        }

        #[test]
        fn valuation_scaling_is_linear((inst, x) in instance_and_profile(), c in 0.01f64..50.0) {
            let inst = inst.with_mode(Mode::Given);
            let base = expected_utility(&inst, &x).unwrap();
            let mut scaled = inst.clone();
            for v in &mut scaled.players[0].valuations {
                *v *= c;
            }
            let after = expected_utility(&scaled, &x).unwrap();
            prop_assert!(close(after[0], c * base[0]));
            for i in 1..inst.n() {
                prop_assert_eq!(after[i], base[i]);
            }
        }

        #[test]
        fn assignment_matches_weight_totals(
            v in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 3), 1..4),
            seed in prop::collection::vec((prop::collection::vec(0.1f64..3.0, 1..4), any::<u64>()), 4),
        ) {
            let n = v.len();
            let tickets: Vec<Vec<f64>> = seed.iter().take(n).map(|(t, _)| t.clone()).collect();
            let items: Vec<Vec<usize>> = seed
                .iter()
                .take(n)
                .map(|(t, s)| (0..t.len()).map(|k| ((s >> (2 * k)) % 3) as usize).collect())
                .collect();
            let inst = AuctionInstance::given_discrete(v, tickets);
            let a = DiscreteAssignment::new(items);
            let x = a.weight_profile(&inst).unwrap();
            prop_assert_eq!(expected_utility_discrete(&inst, &a).unwrap(), expected_utility(&inst, &x).unwrap());
        }
    }
}
