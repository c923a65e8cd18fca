//! Finite-grid evidence that a continuous instance has no pure equilibrium.
//!
//! Every profile on a grid of step `h` is paired with the best deviation each
//! player can find on a finer grid of step `h'` (and the analytic best
//! response when it is attained). If the smallest such improvement over the
//! whole grid is positive, no grid profile is an `epsilon`-equilibrium for any
//! `epsilon` below it. That is evidence at resolution `h`, not a proof.

use rayon::prelude::*;
use serde::Serialize;

use crate::continuous::best_response;
use crate::error::{Error, Result};
use crate::model::{basket_value, player_utility, AuctionInstance, ContinuousProfile, Mode};

pub const PROFILE_GRID_LIMIT: u128 = 10_000_000;
const DEVIATION_GRID_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    /// Step of the profile grid.
    pub grid_step: f64,
    /// Step of the deviation grid; at most `grid_step`.
    pub deviation_step: f64,
    /// Keep the gap of every grid cell in the report.
    pub keep_cells: bool,
}

impl AuditConfig {
    pub fn new(grid_step: f64, deviation_step: f64) -> Self {
        Self { grid_step, deviation_step, keep_cells: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub grid_step: f64,
    pub deviation_step: f64,
    pub grid_size: u64,
    /// Minimum over grid profiles of the largest improvement any player finds.
    pub min_gap: f64,
    /// First grid profile attaining `min_gap`.
    pub witness: ContinuousProfile,
    /// Per-cell gaps in grid order, when requested.
    #[serde(skip)]
    pub cell_gaps: Vec<f64>,
}

impl AuditReport {
    /// Evidence of non-existence at this resolution.
    pub fn suggests_nonexistence(&self) -> bool {
        self.min_gap > 0.0
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Points `(w / k) * c` for every composition `c` of `k` into `m` parts.
fn simplex_grid(w: f64, m: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    if w == 0.0 {
        return Ok(vec![vec![0.0; m]]);
    }
    let k = ((w / step).round() as usize).max(1);
    let count = binomial((k + m - 1) as u128, (m - 1) as u128);
    if count > DEVIATION_GRID_LIMIT {
        return Err(Error::ExplosionGuard { what: "simplex grid points", count, limit: DEVIATION_GRID_LIMIT });
    }
    let unit = w / k as f64;
    let mut out = Vec::with_capacity(count as usize);
    let mut parts = vec![0usize; m];
    fn fill(pos: usize, left: usize, parts: &mut Vec<usize>, unit: f64, out: &mut Vec<Vec<f64>>) {
        let m = parts.len();
        if pos == m - 1 {
            parts[pos] = left;
            out.push(parts.iter().map(|&c| c as f64 * unit).collect());
            return;
        }
        for c in (0..=left).rev() {
            parts[pos] = c;
            fill(pos + 1, left - c, parts, unit, out);
        }
    }
    fill(0, k, &mut parts, unit, &mut out);
    Ok(out)
}

/// Number of steps resolving `[0, v]` at the given step (0 for a point interval).
fn box_steps(v: f64, step: f64) -> usize {
    if v == 0.0 {
        0
    } else {
        ((v / step).round() as usize).max(1)
    }
}

/// Points of the box `prod_j [0, v_j]`, coordinate `j` split into `box_steps` parts.
fn box_grid(values: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
    let steps: Vec<usize> = values.iter().map(|&v| box_steps(v, step)).collect();
    let count = steps.iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128 + 1));
    if count > PROFILE_GRID_LIMIT {
        return Err(Error::ExplosionGuard { what: "box grid points", count, limit: PROFILE_GRID_LIMIT });
    }
    let mut out = vec![Vec::with_capacity(values.len())];
    for (&v, &k) in values.iter().zip(&steps) {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=k).map(move |c| {
                    let mut q = p.clone();
                    q.push(if k == 0 { 0.0 } else { v * c as f64 / k as f64 });
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

/// Best value of `v y / (a + y) - y` over `y = c v / k`, `c = 0..=k`.
///
/// The objective is concave for `y > 0`, so only `c = 0` and the grid points
/// bracketing the continuous maximizer need checking.
fn costly_line_max(v: f64, a: f64, k: usize) -> f64 {
    let f = |c: usize| {
        let y = if k == 0 { 0.0 } else { v * c as f64 / k as f64 };
        basket_value(v, a, y) - y
    };
    if k == 0 {
        return f(0);
    }
    let step = v / k as f64;
    let peak = if a > 0.0 { ((v * a).sqrt() - a).max(0.0) } else { 0.0 };
    let below = ((peak / step).floor() as usize).clamp(1, k);
    let above = ((peak / step).ceil() as usize).clamp(1, k);
    [0, 1, below, above, k].into_iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

enum Deviations {
    Simplex(Vec<Vec<f64>>),
    Lines(Vec<usize>),
}

/// The profile grid of an audit, addressable by cell index.
#[derive(Debug, Clone)]
pub struct AuditGrid {
    grids: Vec<Vec<Vec<f64>>>,
    radices: Vec<usize>,
    size: u64,
}

impl AuditGrid {
    /// Builds the per-player grids at `cfg.grid_step`.
    pub fn new(inst: &AuctionInstance, cfg: &AuditConfig) -> Result<Self> {
        check_config(inst, cfg)?;
        let mut grids = Vec::with_capacity(inst.n());
        for (i, p) in inst.players.iter().enumerate() {
            grids.push(match inst.mode {
                Mode::Given => simplex_grid(inst.budget(i), inst.m(), cfg.grid_step)?,
                Mode::Costly => box_grid(&p.valuations, cfg.grid_step)?,
            });
        }
        let total = grids.iter().fold(1u128, |acc, g| acc.saturating_mul(g.len() as u128));
        if total > PROFILE_GRID_LIMIT {
            return Err(Error::ExplosionGuard { what: "grid profiles", count: total, limit: PROFILE_GRID_LIMIT });
        }
        let radices = grids.iter().map(Vec::len).collect();
        Ok(Self { grids, radices, size: total as u64 })
    }

    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    fn choice(&self, mut index: u64) -> Vec<usize> {
        let mut choice = vec![0; self.radices.len()];
        for (slot, &r) in choice.iter_mut().zip(&self.radices).rev() {
            *slot = (index % r as u64) as usize;
            index /= r as u64;
        }
        choice
    }

    fn rows(&self, index: u64) -> Vec<&[f64]> {
        self.choice(index)
            .into_iter()
            .enumerate()
            .map(|(i, c)| self.grids[i][c].as_slice())
            .collect()
    }

    /// The grid profile with the given index.
    pub fn profile(&self, index: u64) -> ContinuousProfile {
        ContinuousProfile::new(self.rows(index).into_iter().map(<[f64]>::to_vec).collect())
    }
}

fn check_config(inst: &AuctionInstance, cfg: &AuditConfig) -> Result<()> {
    inst.ensure_valid()?;
    if !inst.all_continuous() {
        return Err(Error::WrongBudgetKind { expected: "continuous" });
    }
    let (h, hd) = (cfg.grid_step, cfg.deviation_step);
    if !(h > 0.0 && h.is_finite() && hd > 0.0 && hd.is_finite()) {
        return Err(Error::InvalidConfig("grid steps must be positive".into()));
    }
    if hd > h {
        return Err(Error::InvalidConfig(format!("deviation step {hd} exceeds grid step {h}")));
    }
    Ok(())
}

/// Grid audit of a continuous instance; see the module docs.
pub fn nonexistence_grid_audit(inst: &AuctionInstance, cfg: &AuditConfig) -> Result<AuditReport> {
    let grid = AuditGrid::new(inst, cfg)?;
    let n = inst.n();
    let m = inst.m();
    let deviations: Vec<Deviations> = inst
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| match inst.mode {
            Mode::Given => simplex_grid(inst.budget(i), m, cfg.deviation_step).map(Deviations::Simplex),
            Mode::Costly => Ok(Deviations::Lines(
                p.valuations.iter().map(|&v| box_steps(v, cfg.deviation_step)).collect(),
            )),
        })
        .collect::<Result<_>>()?;

    let cell_gap = |index: u64| -> Result<f64> {
        let rows = grid.rows(index);
        let mut worst = 0.0f64;
        for i in 0..n {
            let v = &inst.players[i].valuations;
            let opposing: Vec<f64> = (0..m)
                .map(|j| inst.delta[j] + rows.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, r)| r[j]).sum::<f64>())
                .collect();
            let current = player_utility(inst.mode, v, &opposing, rows[i]);
            let mut best = match &deviations[i] {
                Deviations::Simplex(points) => points
                    .iter()
                    .map(|y| player_utility(Mode::Given, v, &opposing, y))
                    .fold(f64::NEG_INFINITY, f64::max),
                Deviations::Lines(steps) => (0..m).map(|j| costly_line_max(v[j], opposing[j], steps[j])).sum(),
            };
            let br = best_response(inst, i, &opposing)?;
            if br.attained {
                best = best.max(br.value);
            }
            worst = worst.max(best - current);
        }
        Ok(worst)
    };

    let gaps: Vec<f64> = (0..grid.len()).into_par_iter().map(cell_gap).collect::<Result<_>>()?;
    let (best_index, min_gap) = gaps
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |acc, (k, &g)| if g < acc.1 { (k, g) } else { acc });
    Ok(AuditReport {
        grid_step: cfg.grid_step,
        deviation_step: cfg.deviation_step,
        grid_size: grid.len(),
        min_gap,
        witness: grid.profile(best_index as u64),
        cell_gaps: if cfg.keep_cells { gaps } else { Vec::new() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_grid_sizes() {
        assert_eq!(simplex_grid(1.0, 2, 0.01).unwrap().len(), 101);
        assert_eq!(simplex_grid(1.0, 3, 0.1).unwrap().len(), 66);
        assert_eq!(simplex_grid(0.0, 3, 0.1).unwrap(), vec![vec![0.0; 3]]);
        for p in simplex_grid(2.0, 3, 0.25).unwrap() {
            assert!((p.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn box_grid_sizes() {
        let g = box_grid(&[1.0, 0.0], 0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert!(g.iter().all(|p| p[1] == 0.0));
        assert_eq!(box_grid(&[1.0, 1.0], 0.01).unwrap().len(), 101 * 101);
    }

    #[test]
    fn costly_line_matches_brute_force() {
        for &(v, a, k) in &[(1.0, 0.0, 1000), (1.0, 1.0, 1000), (4.0, 1.0, 400), (7.3, 0.2, 731), (2.0, 5.0, 17), (0.0, 1.0, 0)] {
            let brute = (0..=k)
                .map(|c| {
                    let y = if k == 0 { 0.0 } else { v * c as f64 / k as f64 };
                    basket_value(v, a, y) - y
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(costly_line_max(v, a, k), brute, "v={v} a={a} k={k}");
        }
    }

    #[test]
    fn config_is_checked() {
        let inst = AuctionInstance::given(vec![vec![1.0, 1.0]; 2], vec![1.0, 1.0]);
        assert!(nonexistence_grid_audit(&inst, &AuditConfig::new(0.01, 0.1)).is_err());
        assert!(nonexistence_grid_audit(&inst, &AuditConfig::new(0.0, 0.0)).is_err());
        let big = AuctionInstance::given(vec![vec![1.0; 4]; 3], vec![1.0; 3]);
        assert!(matches!(
            nonexistence_grid_audit(&big, &AuditConfig::new(0.01, 0.01)),
            Err(Error::ExplosionGuard { .. })
        ));
    }

    #[test]
    fn symmetric_instance_has_an_exact_grid_equilibrium() {
        // The equal split is on the grid and is an equilibrium.
        let inst = AuctionInstance::given(vec![vec![1.0, 1.0]; 2], vec![1.0, 1.0]);
        let report = nonexistence_grid_audit(&inst, &AuditConfig::new(0.1, 0.05)).unwrap();
        assert!(report.min_gap.abs() < 1e-12);
        assert!(!report.suggests_nonexistence());
        assert_eq!(report.grid_size, 121);
    }

    #[test]
    fn refining_the_grid_never_raises_the_minimum() {
        let inst = AuctionInstance::given(vec![vec![0.0, 1.0], vec![1.0, 3.0]], vec![1.0, 1.0]).with_delta(vec![0.1, 0.1]);
        let coarse = nonexistence_grid_audit(&inst, &AuditConfig::new(0.04, 0.01)).unwrap();
        let fine = nonexistence_grid_audit(&inst, &AuditConfig::new(0.02, 0.01)).unwrap();
        assert!(fine.min_gap <= coarse.min_gap + 1e-12);
    }

    #[test]
    fn cells_are_kept_on_request() {
        let inst = AuctionInstance::costly(vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        let cfg = AuditConfig { keep_cells: true, ..AuditConfig::new(0.1, 0.1) };
        let report = nonexistence_grid_audit(&inst, &cfg).unwrap();
        assert_eq!(report.cell_gaps.len() as u64, report.grid_size);
        assert!(report.cell_gaps.iter().all(|&g| g >= report.min_gap));
        let grid = AuditGrid::new(&inst, &cfg).unwrap();
        let first = report.cell_gaps.iter().position(|&g| g == report.min_gap).unwrap();
        assert_eq!(grid.profile(first as u64), report.witness);
    }
}
