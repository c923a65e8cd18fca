//! Equilibrium certificates, non-existence audits and Monte Carlo checks.

mod audit;
mod simulate;

pub use audit::{nonexistence_grid_audit, AuditConfig, AuditGrid, AuditReport, PROFILE_GRID_LIMIT};
pub use simulate::{monte_carlo_utilities, SimulationReport, SIMULATION_CHUNK};

use serde::Serialize;

use crate::continuous::best_response_gap;
use crate::discrete::DeviationOracle;
use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::model::{check_profile, AuctionInstance, ContinuousProfile, DiscreteAssignment, Mode};

/// Largest negative gap tolerated before a certificate is considered broken.
pub const GAP_FLOOR: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMethod {
    /// Given-mode continuous budgets, best responses by water-filling.
    WaterFilling,
    /// Costly-mode continuous bids, best responses item by item.
    SeparableCostly,
    /// Ticket assignments, every redistribution enumerated.
    Enumeration,
}

/// Per-player best-response gaps `u_i(BR_i, x_-i) - u_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumCertificate {
    pub method: CertificateMethod,
    pub gaps: Vec<f64>,
    /// False where the gap is measured against a supremum no deviation reaches.
    pub attained: Vec<bool>,
    /// `max(0, max_i gaps[i])`.
    pub epsilon: f64,
    /// Exact gaps, present for ticket assignments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_gaps: Option<Vec<Exact>>,
}

impl EquilibriumCertificate {
    fn from_gaps(method: CertificateMethod, gaps: Vec<f64>, attained: Vec<bool>, exact_gaps: Option<Vec<Exact>>) -> Self {
        let epsilon = gaps.iter().copied().fold(0.0, f64::max);
        Self { method, gaps, attained, epsilon, exact_gaps }
    }

    pub fn is_epsilon_nash(&self, epsilon: f64) -> bool {
        self.epsilon <= epsilon
    }

    /// No player has any strictly improving deviation (ticket assignments only).
    pub fn is_exact_nash(&self) -> bool {
        self.exact_gaps.as_ref().is_some_and(|g| g.iter().all(Exact::is_zero))
    }
}

/// Certifies a continuous profile against analytic best responses.
pub fn epsilon_nash_check_continuous(inst: &AuctionInstance, x: &ContinuousProfile) -> Result<EquilibriumCertificate> {
    inst.ensure_valid()?;
    if !inst.all_continuous() {
        return Err(Error::WrongBudgetKind { expected: "continuous" });
    }
    check_profile(inst, x)?;
    let mut gaps = Vec::with_capacity(inst.n());
    let mut attained = Vec::with_capacity(inst.n());
    for i in 0..inst.n() {
        let (gap, br) = best_response_gap(inst, x, i)?;
        gaps.push(gap);
        attained.push(br.attained);
    }
    let method = match inst.mode {
        Mode::Given => CertificateMethod::WaterFilling,
        Mode::Costly => CertificateMethod::SeparableCostly,
    };
    Ok(EquilibriumCertificate::from_gaps(method, gaps, attained, None))
}

/// Certifies a ticket assignment by enumerating every redistribution of
/// each player's tickets. `epsilon == 0` means an exact equilibrium.
pub fn exact_nash_check_discrete(inst: &AuctionInstance, a: &DiscreteAssignment) -> Result<EquilibriumCertificate> {
    let oracle = DeviationOracle::new(inst)?;
    if a.tickets.len() != inst.n() {
        return Err(Error::DimensionMismatch(format!(
            "assignment covers {} players, instance has {}",
            a.tickets.len(),
            inst.n()
        )));
    }
    let choice: Vec<usize> = a
        .tickets
        .iter()
        .enumerate()
        .map(|(i, row)| oracle.index_of(i, row))
        .collect::<Result<_>>()?;
    let mut gaps = Vec::with_capacity(inst.n());
    let mut exact = Vec::with_capacity(inst.n());
    for i in 0..inst.n() {
        let imp = oracle.improvement(i, &choice, true);
        gaps.push(imp.gap);
        exact.push(Exact(imp.exact_gap.expect("exact gap requested")));
    }
    let attained = vec![true; inst.n()];
    Ok(EquilibriumCertificate::from_gaps(CertificateMethod::Enumeration, gaps, attained, Some(exact)))
}
