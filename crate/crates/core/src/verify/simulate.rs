//! Monte Carlo estimates of expected utility by drawing item winners.
//!
//! Trials run in fixed-size chunks. Chunk `c` uses a ChaCha8 generator seeded
//! with `seed` on stream `c`, so results depend only on `(instance, profile,
//! trials, seed)` and not on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_profile, expected_utility, item_totals, AuctionInstance, ContinuousProfile, Mode};

/// Trials per generator stream.
pub const SIMULATION_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    /// Sample mean of each player's realized utility.
    pub mean: Vec<f64>,
    /// Standard error of each mean.
    pub std_error: Vec<f64>,
    /// Fraction of trials in which player `i` won item `j`.
    pub win_frequency: Vec<Vec<f64>>,
    /// Closed-form expected utility.
    pub analytic: Vec<f64>,
}

impl SimulationReport {
    /// Every sample mean lies within `k` standard errors of the analytic value.
    pub fn within_band(&self, k: f64) -> bool {
        self.mean
            .iter()
            .zip(&self.std_error)
            .zip(&self.analytic)
            .all(|((&m, &se), &a)| (m - a).abs() <= k * se + 1e-12 * (1.0 + a.abs()))
    }
}

struct Tally {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    wins: Vec<Vec<u64>>,
}

impl Tally {
    fn new(n: usize, m: usize) -> Self {
        Tally { sum: vec![0.0; n], sum_sq: vec![0.0; n], wins: vec![vec![0; m]; n] }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            for (a, b) in self.wins[i].iter_mut().zip(&other.wins[i]) {
                *a += b;
            }
        }
        self
    }
}

/// Draws every item's winner with probability proportional to weight,
/// `trials` times, and compares realized utilities with the closed form.
pub fn monte_carlo_utilities(inst: &AuctionInstance, x: &ContinuousProfile, trials: u64, seed: u64) -> Result<SimulationReport> {
    inst.ensure_valid()?;
    check_profile(inst, x)?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    let n = inst.n();
    let m = inst.m();
    let totals = item_totals(inst, x);
    let chunks = trials.div_ceil(SIMULATION_CHUNK);

    let run_chunk = |c: u64| -> Tally {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let count = SIMULATION_CHUNK.min(trials - c * SIMULATION_CHUNK);
        let mut tally = Tally::new(n, m);
        let mut realized = vec![0.0; n];
        for _ in 0..count {
            realized.iter_mut().for_each(|u| *u = 0.0);
            for j in 0..m {
                if totals[j] <= 0.0 {
                    continue;
                }
                let mut draw = rng.gen::<f64>() * totals[j];
                // players first, the auctioneer takes whatever is left
                for i in 0..n {
                    let y = x.rows[i][j];
                    if draw < y {
                        realized[i] += inst.players[i].valuations[j];
                        tally.wins[i][j] += 1;
                        break;
                    }
                    draw -= y;
                }
            }
            for i in 0..n {
                tally.sum[i] += realized[i];
                tally.sum_sq[i] += realized[i] * realized[i];
            }
        }
        tally
    };

    let tally = (0..chunks)
        .into_par_iter()
        .map(run_chunk)
        .reduce(|| Tally::new(n, m), Tally::merge);

    let t = trials as f64;
    let spend: Vec<f64> = x.rows.iter().map(|r| r.iter().sum()).collect();
    let mut mean = Vec::with_capacity(n);
    let mut std_error = Vec::with_capacity(n);
    for i in 0..n {
        let mu = tally.sum[i] / t;
        let var = if trials > 1 { ((tally.sum_sq[i] - t * mu * mu) / (t - 1.0)).max(0.0) } else { 0.0 };
        std_error.push((var / t).sqrt());
        mean.push(match inst.mode {
            Mode::Given => mu,
            Mode::Costly => mu - spend[i],
        });
    }
    let win_frequency = tally
        .wins
        .iter()
        .map(|row| row.iter().map(|&w| w as f64 / t).collect())
        .collect();
    Ok(SimulationReport { trials, seed, mean, std_error, win_frequency, analytic: expected_utility(inst, x)? })
}
