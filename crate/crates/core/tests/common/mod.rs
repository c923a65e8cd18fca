//! Instance generators and brute-force oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's solvers: grid maxima by
//! dynamic programming, single-ticket stability by exact rational arithmetic.

#![allow(dead_code)]

use chinese_auction::{AuctionInstance, ContinuousProfile};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on `(0, hi]`.
pub fn positive(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    hi * (1.0 - rng.gen::<f64>())
}

pub fn symmetric_given(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AuctionInstance {
    let row: Vec<f64> = (0..m).map(|_| positive(rng, 10.0)).collect();
    let budgets = (0..n).map(|_| positive(rng, 5.0)).collect();
    AuctionInstance::given(vec![row; n], budgets)
}

pub fn symmetric_costly(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AuctionInstance {
    let row: Vec<f64> = (0..m).map(|_| positive(rng, 10.0)).collect();
    AuctionInstance::costly(vec![row; n])
}

/// A random strictly interior feasible profile.
pub fn interior_profile(rng: &mut ChaCha8Rng, inst: &AuctionInstance) -> ContinuousProfile {
    let rows = inst
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| match inst.mode {
            chinese_auction::Mode::Given => {
                let raw: Vec<f64> = (0..inst.m()).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|r| r / s * inst.budget(i)).collect()
            }
            chinese_auction::Mode::Costly => p.valuations.iter().map(|v| v * rng.gen_range(0.05..0.95)).collect(),
        })
        .collect();
    ContinuousProfile::new(rows)
}

/// Maximum of `sum_j v_j y_j / (a_j + y_j)` over `y_j = c_j w / k` with
/// `sum_j c_j = k`, by dynamic programming over items.
pub fn simplex_grid_max(v: &[f64], a: &[f64], w: f64, k: usize) -> f64 {
    let step = w / k as f64;
    let f = |j: usize, c: usize| {
        let y = c as f64 * step;
        if a[j] + y > 0.0 {
            v[j] * y / (a[j] + y)
        } else {
            0.0
        }
    };
    let mut best: Vec<f64> = (0..=k).map(|c| f(0, c)).collect();
    for j in 1..v.len() {
        let column: Vec<f64> = (0..=k).map(|c| f(j, c)).collect();
        best = (0..=k)
            .map(|total| (0..=total).map(|c| best[total - c] + column[c]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
    }
    best[k]
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// True when no single-ticket player can strictly gain by moving its ticket.
pub fn single_ticket_stable(inst: &AuctionInstance, items: &[usize]) -> bool {
    let n = inst.n();
    let m = inst.m();
    let w: Vec<BigRational> = inst
        .players
        .iter()
        .map(|p| q(p.budget.tickets().expect("discrete")[0]))
        .collect();
    let mut load: Vec<BigRational> = inst.delta.iter().map(|&d| q(d)).collect();
    for i in 0..n {
        load[items[i]] += &w[i];
    }
    let zero = q(0.0);
    for i in 0..n {
        let here = &load[items[i]];
        let current = &w[i] * q(inst.value(i, items[i])) / here;
        for j in (0..m).filter(|&j| j != items[i]) {
            let there = &load[j] + &w[i];
            let alt = if there > zero { &w[i] * q(inst.value(i, j)) / there } else { zero.clone() };
            if alt > current {
                return false;
            }
        }
    }
    true
}

/// Single ticket per player with the given weights and valuation rows.
pub fn singles(values: Vec<Vec<f64>>, weights: Vec<f64>) -> AuctionInstance {
    let tickets = weights.into_iter().map(|w| vec![w]).collect();
    AuctionInstance::given_discrete(values, tickets)
}
