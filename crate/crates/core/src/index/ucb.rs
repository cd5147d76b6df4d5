//! Upper-confidence index rules for one or several sensed channels.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::index::strategy::{init_slot, top_m_random_ties, Strategy};
use crate::model::{ObservationCounts, SensingOutcome};

/// `X/Y + sqrt(2 ln j / Y)` for `channel` at global slot `slot`.
pub fn ucb_index(counts: &ObservationCounts, channel: usize, slot: u64) -> Result<f64> {
    let y = counts.sensed(channel);
    if y == 0 {
        return Err(Error::UninitializedChannel(channel));
    }
    if slot == 0 {
        return Err(Error::InvalidArgument("slot index starts at 1".into()));
    }
    let y = y as f64;
    Ok(counts.free(channel) as f64 / y + (2.0 * (slot as f64).ln() / y).sqrt())
}

fn all_indices(counts: &ObservationCounts, slot: u64) -> Result<Vec<f64>> {
    (0..counts.num_channels())
        .map(|c| ucb_index(counts, c, slot))
        .collect()
}

/// Single-channel rule: the largest index wins, ties uniformly.
pub fn rule1_choose(counts: &ObservationCounts, slot: u64, rng: &mut dyn RngCore) -> Result<usize> {
    let mut out = Vec::with_capacity(1);
    top_m_random_ties(&all_indices(counts, slot)?, 1, rng, &mut out);
    Ok(out[0])
}

/// Multi-channel rule: the `m` largest indices.
pub fn rule4_choose(
    counts: &ObservationCounts,
    slot: u64,
    m: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<usize>> {
    if m == 0 || m > counts.num_channels() {
        return Err(Error::InvalidArgument(format!(
            "cannot sense {m} of {} channels",
            counts.num_channels()
        )));
    }
    let mut out = Vec::with_capacity(m);
    top_m_random_ties(&all_indices(counts, slot)?, m, rng, &mut out);
    Ok(out)
}

/// Index strategy sensing `m` channels per slot. After `⌈N/m⌉`
/// round-robin initialization slots it senses the top-`m` indices; the slot
/// counter in the bonus term includes the initialization slots.
#[derive(Debug, Clone)]
pub struct Ucb {
    m: usize,
    counts: ObservationCounts,
    scores: Vec<f64>,
}

impl Ucb {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "must sense at least one channel");
        Self {
            m,
            counts: ObservationCounts::new(0),
            scores: Vec::new(),
        }
    }

    pub fn counts(&self) -> &ObservationCounts {
        &self.counts
    }
}

impl Strategy for Ucb {
    fn name(&self) -> &str {
        if self.m == 1 {
            "ucb1"
        } else {
            "ucb-multi"
        }
    }

    fn reset(&mut self, channels: usize, _horizon: u64) {
        assert!(self.m <= channels, "cannot sense more channels than exist");
        self.counts = ObservationCounts::new(channels);
        self.scores = vec![0.0; channels];
    }

    fn select(&mut self, slot: u64, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        let n = self.counts.num_channels();
        if init_slot(slot, n, self.m, out) {
            return;
        }
        let bonus = 2.0 * (slot as f64).ln();
        for (c, s) in self.scores.iter_mut().enumerate() {
            let y = self.counts.sensed(c) as f64;
            *s = self.counts.free(c) as f64 / y + (bonus / y).sqrt();
        }
        top_m_random_ties(&self.scores, self.m, rng, out);
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

    fn counts(pairs: &[(u32, u32)]) -> ObservationCounts {
        ObservationCounts::from_pairs(pairs).unwrap()
    }

    #[test]
    fn index_values() {
        assert_eq!(ucb_index(&counts(&[(1, 1)]), 0, 1).unwrap(), 1.0);
        let v = ucb_index(&counts(&[(0, 2)]), 0, 4).unwrap();
        assert!((v - 4f64.ln().sqrt()).abs() < 1e-15);
        assert!((v - 1.177_410_022_515_474_7).abs() < 1e-12);
        assert_eq!(
            ucb_index(&counts(&[(0, 0)]), 0, 3),
            Err(Error::UninitializedChannel(0))
        );
    }

    #[test]
    fn index_decreases_with_samples_at_fixed_mean() {
        let mut prev = f64::INFINITY;
        for y in [2, 4, 8, 16, 32] {
            let v = ucb_index(&counts(&[(y / 2, y)]), 0, 100).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn rule1_examples() {
        let mut rng = RngSeed::new(2, 0).rng();
        assert_eq!(rule1_choose(&counts(&[(1, 1), (0, 1)]), 3, &mut rng).unwrap(), 0);
        // Hand-evaluated at j = 10: 2/4 + sqrt(ln10/2) = 1.5730,
        // 1/2 + sqrt(ln10) = 2.0174, 5/6 + sqrt(ln10/3) = 1.7094.
        let c = counts(&[(2, 4), (1, 2), (5, 6)]);
        assert_eq!(rule1_choose(&c, 10, &mut rng).unwrap(), 1);
        let sym = counts(&[(1, 2), (1, 2), (1, 2)]);
        let mut hits = [0usize; 3];
        for _ in 0..30_000 {
            hits[rule1_choose(&sym, 7, &mut rng).unwrap()] += 1;
        }
        for h in hits {
            assert!((h as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn rule4_examples() {
        let mut rng = RngSeed::new(3, 0).rng();
        // At j = 20: indices 3/4+sqrt(ln20)=1.9739, 1/2+sqrt(ln20/3)=1.4993,
        // 9/10+sqrt(ln20/5)=1.6740, 0+sqrt(2 ln20)=2.4477.
        let c = counts(&[(3, 4), (3, 6), (9, 10), (0, 1)]);
        let mut top = rule4_choose(&c, 20, 2, &mut rng).unwrap();
        top.sort();
        assert_eq!(top, vec![0, 3]);
        let mut all = rule4_choose(&c, 20, 4, &mut rng).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert_eq!(rule4_choose(&c, 20, 1, &mut rng).unwrap(), vec![3]);
        assert_eq!(rule1_choose(&c, 20, &mut rng).unwrap(), 3);
        assert!(rule4_choose(&c, 20, 5, &mut rng).is_err());
    }

    #[test]
    fn strategy_initializes_every_channel() {
        let mut rng = RngSeed::new(4, 0).rng();
        let mut s = Ucb::new(2);
        s.reset(5, 100);
        let mut out = Vec::new();
        for slot in 1..=3 {
            s.select(slot, &mut rng, &mut out);
            let outcomes: Vec<_> = out.iter().map(|&c| SensingOutcome::new(c, false)).collect();
            s.observe(slot, &outcomes);
        }
        assert!((0..5).all(|c| s.counts().sensed(c) >= 1));
    }
}
