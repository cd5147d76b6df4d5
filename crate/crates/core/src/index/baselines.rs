//! Reference strategies without an exploration bonus.

use rand::seq::index::sample;
use rand::{Rng, RngCore};

use crate::index::strategy::{init_slot, top_m_random_ties, Strategy};
use crate::model::{ObservationCounts, SensingOutcome};

/// Uniformly random channel.
pub fn baseline_random(channels: usize, rng: &mut dyn RngCore) -> usize {
    rng.gen_range(0..channels)
}

/// Channel with the largest empirical frequency `X/Y`; unsensed channels
/// score zero. Ties uniform.
pub fn baseline_myopic_freq(counts: &ObservationCounts, rng: &mut dyn RngCore) -> usize {
    let scores: Vec<f64> = (0..counts.num_channels())
        .map(|c| counts.estimate(c).unwrap_or(0.0))
        .collect();
    let mut out = Vec::with_capacity(1);
    top_m_random_ties(&scores, 1, rng, &mut out);
    out[0]
}

/// How stay-with-winner leaves a busy channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchRule {
    /// Uniformly among the other channels.
    #[default]
    UniformOther,
    /// The next channel in cyclic order.
    Cyclic,
    /// The other channel with the best empirical frequency.
    BestOther,
}

/// Stay on the current channel after a free slot, switch after a busy one.
pub fn baseline_stay_with_winner(
    current: usize,
    was_free: bool,
    rule: SwitchRule,
    counts: &ObservationCounts,
    rng: &mut dyn RngCore,
) -> usize {
    let n = counts.num_channels();
    if was_free || n == 1 {
        return current;
    }
    match rule {
        SwitchRule::UniformOther => {
            let k = rng.gen_range(0..n - 1);
            if k >= current {
                k + 1
            } else {
                k
            }
        }
        SwitchRule::Cyclic => (current + 1) % n,
        SwitchRule::BestOther => {
            let scores: Vec<f64> = (0..n)
                .map(|c| {
                    if c == current {
                        f64::NEG_INFINITY
                    } else {
                        counts.estimate(c).unwrap_or(0.0)
                    }
                })
                .collect();
            let mut out = Vec::with_capacity(1);
            top_m_random_ties(&scores, 1, rng, &mut out);
            out[0]
        }
    }
}

/// `m` distinct channels chosen uniformly each slot.
#[derive(Debug, Clone)]
pub struct RandomChoice {
    m: usize,
    channels: usize,
}

impl RandomChoice {
    pub fn new(m: usize) -> Self {
        Self { m, channels: 0 }
    }
}

impl Strategy for RandomChoice {
    fn name(&self) -> &str {
        "random"
    }
    fn reset(&mut self, channels: usize, _horizon: u64) {
        self.channels = channels;
    }
    fn select(&mut self, _slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        out.clear();
        if self.m == 1 {
            out.push(baseline_random(self.channels, rng));
        } else {
            out.extend(sample(rng, self.channels, self.m).iter());
        }
    }
    fn observe(&mut self, _slot: u64, _outcomes: &[SensingOutcome]) {}
}

/// Empirical-frequency myopic rule after a round-robin pass.
#[derive(Debug, Clone)]
pub struct MyopicFreq {
    m: usize,
    counts: ObservationCounts,
}

impl MyopicFreq {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            counts: ObservationCounts::new(0),
        }
    }
}

impl Strategy for MyopicFreq {
    fn name(&self) -> &str {
        "myopic-freq"
    }
    fn reset(&mut self, channels: usize, _horizon: u64) {
        self.counts = ObservationCounts::new(channels);
    }
    fn select(&mut self, slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        if init_slot(slot, self.counts.num_channels(), self.m, out) {
            return;
        }
        if self.m == 1 {
            out.clear();
            out.push(baseline_myopic_freq(&self.counts, rng));
        } else {
            let scores: Vec<f64> = (0..self.counts.num_channels())
                .map(|c| self.counts.estimate(c).unwrap_or(0.0))
                .collect();
            top_m_random_ties(&scores, self.m, rng, out);
        }
    }
    fn observe(&mut self, _slot: u64, outcomes: &[SensingOutcome]) {
        for o in outcomes {
            self.counts.record(*o);
        }
    }
}

/// Single-channel stay-with-winner, starting on a uniformly random channel.
#[derive(Debug, Clone)]
pub struct StayWithWinner {
    rule: SwitchRule,
    counts: ObservationCounts,
    current: Option<usize>,
    last_free: bool,
}

impl StayWithWinner {
    pub fn new(rule: SwitchRule) -> Self {
        Self {
            rule,
            counts: ObservationCounts::new(0),
            current: None,
            last_free: true,
        }
    }
}

impl Strategy for StayWithWinner {
    fn name(&self) -> &str {
        "stay-with-winner"
    }
    fn reset(&mut self, channels: usize, _horizon: u64) {
        self.counts = ObservationCounts::new(channels);
        self.current = None;
        self.last_free = true;
    }
    fn select(&mut self, _slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        let next = match self.current {
            None => baseline_random(self.counts.num_channels(), rng),
            Some(c) => baseline_stay_with_winner(c, self.last_free, self.rule, &self.counts, rng),
        };
        self.current = Some(next);
        out.clear();
        out.push(next);
    }
    fn observe(&mut self, _slot: u64, outcomes: &[SensingOutcome]) {
        for o in outcomes {
            self.counts.record(*o);
            self.last_free = o.free;
        }
    }
}

/// Two-state stay-with-winner that only alternates between a fixed pair
/// of channels, starting on `pair.0`.
#[derive(Debug, Clone)]
pub struct OptimisticStayWithWinner {
    pair: (usize, usize),
    on_first: bool,
    last_free: bool,
}

impl OptimisticStayWithWinner {
    pub fn new(best: usize, second: usize) -> Self {
        Self {
            pair: (best, second),
            on_first: true,
            last_free: true,
        }
    }

    /// Long-run fraction of slots on the second channel of the pair.
    pub fn stationary_second(theta_best: f64, theta_second: f64) -> f64 {
        let (a, b) = (1.0 - theta_best, 1.0 - theta_second);
        if a + b == 0.0 {
            return 0.0;
        }
        a / (a + b)
    }
}

impl Strategy for OptimisticStayWithWinner {
    fn name(&self) -> &str {
        "optimistic-stay-with-winner"
    }
    fn reset(&mut self, _channels: usize, _horizon: u64) {
        self.on_first = true;
        self.last_free = true;
    }
    fn select(&mut self, slot: u64, _rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        if slot > 1 && !self.last_free {
            self.on_first = !self.on_first;
        }
        out.clear();
        out.push(if self.on_first { self.pair.0 } else { self.pair.1 });
    }
    fn observe(&mut self, _slot: u64, outcomes: &[SensingOutcome]) {
        if let Some(o) = outcomes.first() {
            self.last_free = o.free;
        }
    }
}
