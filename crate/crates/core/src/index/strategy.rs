use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, RngCore};

use crate::bayes::ValueTable;
use crate::model::{DiscretePrior, ObservationCounts, SensingOutcome, ThetaVector};

/// A channel-selection rule driven slot by slot.
///
/// All randomness comes from the injected generator, so a run replays
/// exactly from its seeds.
pub trait Strategy: Send {
    fn name(&self) -> &str;

    /// Prepares for a new block of `horizon` slots over `channels` channels.
    fn reset(&mut self, channels: usize, horizon: u64);

    /// Writes the channels to sense in slot `slot` (1-based) into `out`.
    fn select(&mut self, slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>);

    /// Sensing results for the channels chosen in `slot`.
    fn observe(&mut self, slot: u64, outcomes: &[SensingOutcome]);
}

/// Picks the `m` highest scores. Candidates tied at the cut-off are chosen
/// uniformly at random.
pub fn top_m_random_ties(scores: &[f64], m: usize, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
    out.clear();
    let m = m.min(scores.len());
    if m == 0 {
        return;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let cutoff = scores[order[m - 1]];
    out.extend(order.iter().copied().filter(|&i| scores[i] > cutoff));
    let tied: Vec<usize> = order.iter().copied().filter(|&i| scores[i] == cutoff).collect();
    let need = m - out.len();
    if need == tied.len() {
        out.extend(tied);
    } else {
        for k in sample(rng, tied.len(), need).iter() {
            out.push(tied[k]);
        }
    }
}

/// Round-robin initialization: slot `s` senses channels `(s-1)m .. s·m`,
/// wrapping around in the last initialization slot.
pub(crate) fn init_slot(slot: u64, channels: usize, m: usize, out: &mut Vec<usize>) -> bool {
    let init_slots = channels.div_ceil(m) as u64;
    if slot > init_slots {
        return false;
    }
    out.clear();
    let start = (slot as usize - 1) * m;
    out.extend((start..start + m).map(|i| i % channels));
    true
}

/// Knows `θ` and always senses the `m` best channels.
#[derive(Debug, Clone)]
pub struct Genie {
    choice: Vec<usize>,
    m: usize,
}

impl Genie {
    pub fn new(theta: &ThetaVector, m: usize) -> Self {
        let mut choice = theta.ranked();
        choice.truncate(m);
        Self { choice, m }
    }
}

impl Strategy for Genie {
    fn name(&self) -> &str {
        "genie"
    }
    fn reset(&mut self, _channels: usize, _horizon: u64) {}
    fn select(&mut self, _slot: u64, _rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        out.clear();
        out.extend_from_slice(&self.choice[..self.m.min(self.choice.len())]);
    }
    fn observe(&mut self, _slot: u64, _outcomes: &[SensingOutcome]) {}
}

/// Senses the channels with the highest posterior availability under a
/// known prior; no exploration.
#[derive(Debug, Clone)]
pub struct MyopicBayes {
    prior: DiscretePrior<f64>,
    counts: ObservationCounts,
    m: usize,
}

impl MyopicBayes {
    pub fn new(prior: DiscretePrior<f64>, m: usize) -> Self {
        let counts = ObservationCounts::new(prior.num_channels());
        Self { prior, counts, m }
    }
}

impl Strategy for MyopicBayes {
    fn name(&self) -> &str {
        "myopic-bayes"
    }
    fn reset(&mut self, channels: usize, _horizon: u64) {
        self.counts = ObservationCounts::new(channels);
    }
    fn select(&mut self, _slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        let post = self
            .prior
            .posterior_from_counts(&self.counts)
            .unwrap_or_else(|_| self.prior.clone());
        top_m_random_ties(&post.availabilities(), self.m, rng, out);
    }
    fn observe(&mut self, _slot: u64, outcomes: &[SensingOutcome]) {
        for o in outcomes {
            self.counts.record(*o);
        }
    }
}

/// Follows a precomputed optimal value table, splitting ties uniformly.
#[derive(Debug, Clone)]
pub struct DpOptimal {
    table: Arc<ValueTable<f64>>,
    counts: ObservationCounts,
    horizon: u64,
}

impl DpOptimal {
    pub fn new(table: Arc<ValueTable<f64>>) -> Self {
        let counts = ObservationCounts::new(table.prior().num_channels());
        let horizon = table.horizon() as u64;
        Self {
            table,
            counts,
            horizon,
        }
    }
}

impl Strategy for DpOptimal {
    fn name(&self) -> &str {
        "dp-optimal"
    }
    fn reset(&mut self, channels: usize, horizon: u64) {
        assert_eq!(horizon, self.horizon, "value table built for a different horizon");
        self.counts = ObservationCounts::new(channels);
    }
    fn select(&mut self, slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        let remaining = (self.horizon + 1 - slot) as u32;
        let action = self
            .table
            .optimal_action(&self.counts, remaining)
            .expect("every reachable state is in the table");
        out.clear();
        out.extend_from_slice(&action.ties[rng.gen_range(0..action.ties.len())]);
    }
    fn observe(&mut self, _slot: u64, outcomes: &[SensingOutcome]) {
        for o in outcomes {
            self.counts.record(*o);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    #[test]
    fn top_m_breaks_boundary_ties_uniformly() {
        let mut rng = RngSeed::new(1, 0).rng();
        let scores = [0.9, 0.5, 0.5, 0.5, 0.1];
        let mut out = Vec::new();
        let mut hits = [0usize; 5];
        let n = 30_000;
        for _ in 0..n {
            top_m_random_ties(&scores, 2, &mut rng, &mut out);
            assert_eq!(out.len(), 2);
            assert_eq!(out[0], 0);
            for &c in &out {
                hits[c] += 1;
            }
        }
        assert_eq!(hits[4], 0);
        for c in 1..4 {
            assert!((hits[c] as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn init_wraps_around() {
        let mut out = Vec::new();
        assert!(init_slot(1, 5, 2, &mut out));
        assert_eq!(out, vec![0, 1]);
        assert!(init_slot(3, 5, 2, &mut out));
        assert_eq!(out, vec![4, 0]);
        assert!(!init_slot(4, 5, 2, &mut out));
    }

    #[test]
    fn genie_senses_best() {
        let theta = ThetaVector::new(vec![0.3, 0.9, 0.5]).unwrap();
        let mut g = Genie::new(&theta, 2);
        let mut out = Vec::new();
        g.select(1, &mut RngSeed::new(0, 0).rng(), &mut out);
        assert_eq!(out, vec![1, 2]);
    }
}
