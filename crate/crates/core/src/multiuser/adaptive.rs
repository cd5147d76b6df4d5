//! Per-user strategies for the multi-user game.

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::index::Strategy;
use crate::model::{ObservationCounts, SensingOutcome, ThetaVector};
use crate::multiuser::kkt::{kkt_optimal_mixed, sample_index, MixedStrategy};

/// Selection law of the proportional rule: `θ̂_i / Σ θ̂`.
pub fn rule2_probabilities(counts: &ObservationCounts) -> Vec<f64> {
    let est: Vec<f64> = (0..counts.num_channels())
        .map(|c| counts.estimate(c).unwrap_or(0.0))
        .collect();
    let total: f64 = est.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / est.len() as f64; est.len()];
    }
    est.iter().map(|e| e / total).collect()
}

pub fn rule2_step<R: Rng + ?Sized>(counts: &ObservationCounts, rng: &mut R) -> usize {
    sample_index(&rule2_probabilities(counts), rng)
}

/// First slot of the plug-in optimal phase: `⌈ln T⌉`.
pub fn rule3_switch_slot(horizon: u64) -> u64 {
    ((horizon as f64).ln().ceil() as u64).max(1)
}

/// Selection law of the plug-in rule: proportional before
/// [`rule3_switch_slot`], then the optimal symmetric split for the
/// estimated availabilities.
pub fn rule3_probabilities(counts: &ObservationCounts, slot: u64, users: u32, horizon: u64) -> Result<Vec<f64>> {
    if slot < rule3_switch_slot(horizon) {
        return Ok(rule2_probabilities(counts));
    }
    let est: Vec<f64> = (0..counts.num_channels())
        .map(|c| counts.estimate(c).unwrap_or(0.0))
        .collect();
    let sol = kkt_optimal_mixed(&ThetaVector::new(est)?, users)?;
    Ok(sol.p.probabilities().to_vec())
}

pub fn rule3_step<R: Rng + ?Sized>(
    counts: &ObservationCounts,
    slot: u64,
    users: u32,
    horizon: u64,
    rng: &mut R,
) -> Result<usize> {
    Ok(sample_index(&rule3_probabilities(counts, slot, users, horizon)?, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Proportional,
    PlugIn { users: u32 },
}

/// Learns availabilities from its own sensing. For the first `N` slots user
/// `k` senses channel `(s + k) mod N` and records it as free whatever the
/// outcome; afterwards it samples from the phase's selection law.
#[derive(Debug, Clone)]
pub struct AdaptiveUser {
    user: usize,
    phase: Phase,
    counts: ObservationCounts,
    horizon: u64,
}

impl AdaptiveUser {
    /// Proportional rule.
    pub fn rule2(user: usize) -> Self {
        Self {
            user,
            phase: Phase::Proportional,
            counts: ObservationCounts::new(0),
            horizon: 0,
        }
    }

    /// Plug-in optimal rule for `users` competing users.
    pub fn rule3(user: usize, users: u32) -> Self {
        Self {
            phase: Phase::PlugIn { users },
            ..Self::rule2(user)
        }
    }

    pub fn counts(&self) -> &ObservationCounts {
        &self.counts
    }

    fn initializing(&self, slot: u64) -> bool {
        slot <= self.counts.num_channels() as u64
    }
}

impl Strategy for AdaptiveUser {
    fn name(&self) -> &str {
        match self.phase {
            Phase::Proportional => "rule2",
            Phase::PlugIn { .. } => "rule3",
        }
    }

    fn reset(&mut self, channels: usize, horizon: u64) {
        self.counts = ObservationCounts::new(channels);
        self.horizon = horizon;
    }

    fn select(&mut self, slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        out.clear();
        let n = self.counts.num_channels();
        if self.initializing(slot) {
            out.push((slot as usize - 1 + self.user) % n);
            return;
        }
        let choice = match self.phase {
            Phase::Proportional => rule2_step(&self.counts, rng),
            Phase::PlugIn { users } => rule3_step(&self.counts, slot, users, self.horizon, rng)
                .expect("estimates stay positive after initialization"),
        };
        out.push(choice);
    }

    fn observe(&mut self, slot: u64, outcomes: &[SensingOutcome]) {
        for o in outcomes {
            if self.initializing(slot) {
                self.counts.set(o.channel, 1, 1);
            } else {
                self.counts.record(*o);
            }
        }
    }
}

/// Samples every slot from a fixed mixed strategy.
#[derive(Debug, Clone)]
pub struct FixedMixed {
    p: MixedStrategy,
    label: String,
}

impl FixedMixed {
    pub fn new(p: MixedStrategy, label: impl Into<String>) -> Self {
        Self { p, label: label.into() }
    }
}

impl Strategy for FixedMixed {
    fn name(&self) -> &str {
        &self.label
    }
    fn reset(&mut self, channels: usize, _horizon: u64) {
        assert_eq!(channels, self.p.len(), "strategy built for a different channel count");
    }
    fn select(&mut self, _slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        out.clear();
        out.push(self.p.sample(rng));
    }
    fn observe(&mut self, _slot: u64, _outcomes: &[SensingOutcome]) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    #[test]
    fn proportional_law() {
        let eq = ObservationCounts::from_pairs(&[(2, 4), (2, 4), (2, 4)]).unwrap();
        for p in rule2_probabilities(&eq) {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        // θ̂ = (0.8, 0.2) sums to one, so the law is θ̂ itself.
        let c = ObservationCounts::from_pairs(&[(4, 5), (1, 5)]).unwrap();
        let p = rule2_probabilities(&c);
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn plug_in_phase_boundary() {
        let t = 100_000;
        let s = rule3_switch_slot(t);
        assert_eq!(s, 12);
        let c = ObservationCounts::from_pairs(&[(6, 10), (3, 10)]).unwrap();
        let before = rule3_probabilities(&c, s - 1, 2, t).unwrap();
        let after = rule3_probabilities(&c, s, 2, t).unwrap();
        assert_eq!(before, rule2_probabilities(&c));
        let exact = kkt_optimal_mixed(&ThetaVector::new(vec![0.6, 0.3]).unwrap(), 2).unwrap();
        assert_eq!(after, exact.p.probabilities());
    }

    #[test]
    fn initialization_forces_free() {
        let mut u = AdaptiveUser::rule2(1);
        u.reset(3, 50);
        let mut rng = RngSeed::new(41, 0).rng();
        let mut out = Vec::new();
        let mut seen = Vec::new();
        for slot in 1..=3 {
            u.select(slot, &mut rng, &mut out);
            seen.push(out[0]);
            u.observe(slot, &[SensingOutcome::new(out[0], false)]);
        }
        assert_eq!(seen, vec![1, 2, 0]);
        assert_eq!(u.counts().free_counts(), &[1, 1, 1]);
        assert_eq!(u.counts().sense_counts(), &[1, 1, 1]);
    }
}
