use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{ChannelSource, Strategy};
use crate::model::{sample_slot_into, SensingOutcome, ThetaVector};
use crate::multiuser::contention::backoff_winner;
use crate::rng::{RngSeed, SimRng, ROLE_CONTENTION, ROLE_TRAFFIC};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiuserBlock {
    pub per_user_bits: Vec<f64>,
    pub total_bits: f64,
    /// `selections[k][i]`: slots in which user `k` sensed channel `i`.
    pub selections: Vec<Vec<u32>>,
    /// `BTΣθ`, reachable by assigning users to distinct channels when `K ≥ N`.
    pub spectral_opportunity: f64,
    /// Best centralized value: `BT` times the sum of the `min(K, N)` largest θ.
    pub centralized: f64,
}

impl MultiuserBlock {
    pub fn loss_vs_centralized(&self) -> f64 {
        self.centralized - self.total_bits
    }
}

/// Simulates one block with every user stepped in order within each slot.
/// Users observe the primary-user state of the channel they sensed;
/// contention only decides who transmits.
pub fn run_multiuser_block<R: Rng + ?Sized>(
    users: &mut [Box<dyn Strategy>],
    theta: &ThetaVector,
    horizon: u64,
    bandwidth: f64,
    traffic: &mut R,
    contention: &mut R,
    user_rngs: &mut [SimRng],
) -> MultiuserBlock {
    let n = theta.len();
    let k = users.len();
    assert_eq!(user_rngs.len(), k, "one generator per user");
    for u in users.iter_mut() {
        u.reset(n, horizon);
    }
    let mut state = vec![false; n];
    let mut choice = Vec::new();
    let mut picks: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut contenders: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut wins = vec![0u64; k];
    let mut selections = vec![vec![0u32; n]; k];
    let mut outcomes = Vec::new();
    for slot in 1..=horizon {
        sample_slot_into(theta, traffic, &mut state);
        for c in &mut contenders {
            c.clear();
        }
        for (u, (strategy, rng)) in users.iter_mut().zip(user_rngs.iter_mut()).enumerate() {
            strategy.select(slot, rng, &mut choice);
            for &c in &choice {
                contenders[c].push(u);
                selections[u][c] += 1;
            }
            picks[u].clone_from(&choice);
        }
        for (c, users_here) in contenders.iter().enumerate() {
            if state[c] {
                if let Some(w) = backoff_winner(users_here, contention) {
                    wins[w] += 1;
                }
            }
        }
        for (u, strategy) in users.iter_mut().enumerate() {
            outcomes.clear();
            outcomes.extend(picks[u].iter().map(|&c| SensingOutcome::new(c, state[c])));
            strategy.observe(slot, &outcomes);
        }
    }
    let per_user_bits: Vec<f64> = wins.iter().map(|&w| bandwidth * w as f64).collect();
    let bt = bandwidth * horizon as f64;
    MultiuserBlock {
        total_bits: stats::pairwise_sum(&per_user_bits),
        per_user_bits,
        selections,
        spectral_opportunity: bt * theta.as_slice().iter().sum::<f64>(),
        centralized: bt * theta.top_sum(k.min(n)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MultiuserSettings {
    pub users: usize,
    pub horizon: u64,
    pub bandwidth: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiuserReport {
    pub strategy: String,
    pub users: usize,
    pub horizon: u64,
    pub bandwidth: f64,
    pub replications: usize,
    /// Mean bits of each user.
    pub per_user_mean: Vec<f64>,
    /// Per-replication average over users.
    pub user_average: Vec<f64>,
    pub mean_per_user: f64,
    pub ci95_per_user: f64,
    pub mean_total: f64,
    pub ci95_total: f64,
    pub mean_centralized: f64,
    pub mean_loss_vs_centralized: f64,
    /// Share of all selections that went to each channel.
    pub channel_frequencies: Vec<f64>,
}

/// Replicated multi-user runs. `factory(k, θ)` builds user `k`'s strategy
/// for a replication whose availabilities are `θ`.
pub fn simulate_multiuser<F>(factory: F, source: &ChannelSource, settings: MultiuserSettings) -> Result<MultiuserReport>
where
    F: Fn(usize, &ThetaVector) -> Box<dyn Strategy> + Sync,
{
    let MultiuserSettings {
        users,
        horizon,
        bandwidth,
        replications,
        seed,
    } = settings;
    if users == 0 || replications == 0 {
        return Err(Error::InvalidArgument("users and replications must be positive".into()));
    }
    let n = source.num_channels();
    let name = factory(0, &source.theta_for(seed, 0)).name().to_string();
    let blocks: Vec<MultiuserBlock> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let theta = source.theta_for(seed, r);
            let mut traffic = RngSeed::derive(seed, r, ROLE_TRAFFIC).rng();
            let mut contention = RngSeed::derive(seed, r, ROLE_CONTENTION).rng();
            let mut rngs: Vec<SimRng> = (0..users).map(|k| RngSeed::for_user(seed, r, k).rng()).collect();
            let mut strategies: Vec<Box<dyn Strategy>> = (0..users).map(|k| factory(k, &theta)).collect();
            run_multiuser_block(
                &mut strategies,
                &theta,
                horizon,
                bandwidth,
                &mut traffic,
                &mut contention,
                &mut rngs,
            )
        })
        .collect();
    let avg: Vec<f64> = blocks.iter().map(|b| b.total_bits / users as f64).collect();
    let totals: Vec<f64> = blocks.iter().map(|b| b.total_bits).collect();
    let per_user_mean = (0..users)
        .map(|k| stats::mean(&blocks.iter().map(|b| b.per_user_bits[k]).collect::<Vec<_>>()))
        .collect();
    let mut freq = vec![0.0; n];
    for b in &blocks {
        for row in &b.selections {
            for (c, &s) in row.iter().enumerate() {
                freq[c] += s as f64;
            }
        }
    }
    let all: f64 = freq.iter().sum();
    for f in &mut freq {
        *f /= all;
    }
    let centralized: Vec<f64> = blocks.iter().map(|b| b.centralized).collect();
    let loss: Vec<f64> = blocks.iter().map(|b| b.loss_vs_centralized()).collect();
    Ok(MultiuserReport {
        strategy: name,
        users,
        horizon,
        bandwidth,
        replications,
        per_user_mean,
        mean_per_user: stats::mean(&avg),
        ci95_per_user: stats::ci95_half_width(&avg),
        user_average: avg,
        mean_total: stats::mean(&totals),
        ci95_total: stats::ci95_half_width(&totals),
        mean_centralized: stats::mean(&centralized),
        mean_loss_vs_centralized: stats::mean(&loss),
        channel_frequencies: freq,
    })
}
