//! Single-user block simulation and Monte-Carlo loss estimates.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::strategy::Strategy;
use crate::model::{sample_slot_into, DiscretePrior, SensingOutcome, ThetaVector};
use crate::rng::{RngSeed, ROLE_THETA, ROLE_TRAFFIC, ROLE_USER_BASE};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub channels: Vec<usize>,
    pub free: Vec<bool>,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockResult {
    /// Realized bits `W`.
    pub bits: f64,
    /// `B Σ_j (top-M θ sum − Σ θ of sensed channels)`; the expected loss
    /// given the choices, free of traffic noise.
    pub pseudo_loss: f64,
    pub sense_counts: Vec<u32>,
    pub free_counts: Vec<u32>,
    pub trace: Option<Vec<SlotRecord>>,
}

/// Runs one block of `horizon` slots. Channel states come from `traffic`,
/// the strategy's own coin flips from `decisions`.
pub fn run_block<R: Rng + ?Sized>(
    strategy: &mut dyn Strategy,
    theta: &ThetaVector,
    horizon: u64,
    bandwidth: f64,
    traffic: &mut R,
    decisions: &mut dyn RngCore,
    trace: bool,
) -> BlockResult {
    let n = theta.len();
    strategy.reset(n, horizon);
    let mut state = vec![false; n];
    let mut chosen = Vec::new();
    let mut outcomes = Vec::new();
    let mut sense_counts = vec![0u32; n];
    let mut free_counts = vec![0u32; n];
    let mut records = trace.then(Vec::new);
    let mut free_slots = 0u64;
    let mut regret_mass = 0.0;
    let mut best_sum = None;
    for slot in 1..=horizon {
        sample_slot_into(theta, traffic, &mut state);
        strategy.select(slot, decisions, &mut chosen);
        let best = *best_sum.get_or_insert_with(|| theta.top_sum(chosen.len()));
        outcomes.clear();
        let mut got = 0.0;
        for &c in &chosen {
            let free = state[c];
            outcomes.push(SensingOutcome::new(c, free));
            sense_counts[c] += 1;
            got += theta.get(c);
            if free {
                free_counts[c] += 1;
                free_slots += 1;
            }
        }
        regret_mass += best - got;
        if let Some(r) = records.as_mut() {
            r.push(SlotRecord {
                slot,
                channels: chosen.clone(),
                free: outcomes.iter().map(|o| o.free).collect(),
                bits: bandwidth * outcomes.iter().filter(|o| o.free).count() as f64,
            });
        }
        strategy.observe(slot, &outcomes);
    }
    BlockResult {
        bits: bandwidth * free_slots as f64,
        pseudo_loss: bandwidth * regret_mass,
        sense_counts,
        free_counts,
        trace: records,
    }
}

/// Where each replication's availability vector comes from.
#[derive(Debug, Clone)]
pub enum ChannelSource {
    Known(ThetaVector),
    /// A fresh draw from the prior per replication.
    Prior(DiscretePrior<f64>),
}

impl ChannelSource {
    pub fn num_channels(&self) -> usize {
        match self {
            ChannelSource::Known(t) => t.len(),
            ChannelSource::Prior(p) => p.num_channels(),
        }
    }

    pub fn theta_for(&self, seed: u64, replication: u64) -> ThetaVector {
        match self {
            ChannelSource::Known(t) => t.clone(),
            ChannelSource::Prior(p) => {
                p.sample_theta(&mut RngSeed::derive(seed, replication, ROLE_THETA).rng())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub strategy: String,
    pub horizon: u64,
    pub bandwidth: f64,
    pub sense_per_slot: usize,
    pub replications: usize,
    /// Mean over replications of `B T Σ top-M θ`.
    pub genie_value: f64,
    pub mean_bits: f64,
    pub ci95_bits: f64,
    pub losses: Vec<f64>,
    pub mean_loss: f64,
    pub ci95: f64,
    pub pseudo_losses: Vec<f64>,
    pub mean_pseudo_loss: f64,
    pub pseudo_ci95: f64,
    pub mean_sense_counts: Vec<f64>,
    /// Share of all sensing actions spent on each channel.
    pub channel_frequencies: Vec<f64>,
}

/// Settings shared by every replication of [`measure_loss`].
#[derive(Debug, Clone, Copy)]
pub struct LossSettings {
    pub horizon: u64,
    pub bandwidth: f64,
    pub sense_per_slot: usize,
    pub replications: usize,
    pub seed: u64,
}

/// Genie value minus realized bits, over independent replications run in
/// parallel. Replication `r` uses streams derived from `(seed, r)`, so the
/// report does not depend on the thread count.
pub fn measure_loss<F>(factory: F, source: &ChannelSource, settings: LossSettings) -> Result<LossReport>
where
    F: Fn(&ThetaVector) -> Box<dyn Strategy> + Sync,
{
    let LossSettings {
        horizon,
        bandwidth,
        sense_per_slot: m,
        replications,
        seed,
    } = settings;
    if replications == 0 {
        return Err(Error::InvalidArgument("at least one replication is required".into()));
    }
    let n = source.num_channels();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("cannot sense {m} of {n} channels")));
    }
    let name = factory(&source.theta_for(seed, 0)).name().to_string();
    let runs: Vec<(f64, BlockResult)> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let theta = source.theta_for(seed, r);
            let mut traffic = RngSeed::derive(seed, r, ROLE_TRAFFIC).rng();
            let mut decisions = RngSeed::derive(seed, r, ROLE_USER_BASE).rng();
            let mut strategy = factory(&theta);
            let block = run_block(
                strategy.as_mut(),
                &theta,
                horizon,
                bandwidth,
                &mut traffic,
                &mut decisions,
                false,
            );
            (bandwidth * horizon as f64 * theta.top_sum(m), block)
        })
        .collect();
    let genies: Vec<f64> = runs.iter().map(|(g, _)| *g).collect();
    let bits: Vec<f64> = runs.iter().map(|(_, b)| b.bits).collect();
    let losses: Vec<f64> = runs.iter().map(|(g, b)| g - b.bits).collect();
    let pseudo: Vec<f64> = runs.iter().map(|(_, b)| b.pseudo_loss).collect();
    let mut mean_sense_counts = vec![0.0; n];
    for c in 0..n {
        let col: Vec<f64> = runs.iter().map(|(_, b)| b.sense_counts[c] as f64).collect();
        mean_sense_counts[c] = stats::mean(&col);
    }
    let total: f64 = stats::pairwise_sum(&mean_sense_counts);
    let channel_frequencies = mean_sense_counts
        .iter()
        .map(|c| if total > 0.0 { c / total } else { 0.0 })
        .collect();
    Ok(LossReport {
        strategy: name,
        horizon,
        bandwidth,
        sense_per_slot: m,
        replications,
        genie_value: stats::mean(&genies),
        mean_bits: stats::mean(&bits),
        ci95_bits: stats::ci95_half_width(&bits),
        mean_loss: stats::mean(&losses),
        ci95: stats::ci95_half_width(&losses),
        losses,
        mean_pseudo_loss: stats::mean(&pseudo),
        pseudo_ci95: stats::ci95_half_width(&pseudo),
        pseudo_losses: pseudo,
        mean_sense_counts,
        channel_frequencies,
    })
}
