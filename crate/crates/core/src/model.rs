//! Primary-network channel model: availability vectors, finite-mixture
//! priors and their Bayesian updates, observation bookkeeping and sampling.
//!
//! Channels are indexed from 0 throughout the library. Text output
//! (CLI, CSV) reports them 1-based.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Per-slot free probability of every channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThetaVector(Vec<f64>);

impl ThetaVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidTheta("need at least one channel".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidTheta(format!("{v} is not in [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, channel: usize) -> f64 {
        self.0[channel]
    }

    /// Largest availability.
    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Channels sorted by decreasing availability (stable on ties).
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]));
        idx
    }

    /// Sum of the `m` largest availabilities.
    pub fn top_sum(&self, m: usize) -> f64 {
        self.ranked().iter().take(m).map(|&i| self.0[i]).sum()
    }
}

impl TryFrom<Vec<f64>> for ThetaVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThetaVector> for Vec<f64> {
    fn from(t: ThetaVector) -> Self {
        t.0
    }
}

/// Result of sensing one channel in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensingOutcome {
    pub channel: usize,
    pub free: bool,
}

impl SensingOutcome {
    pub fn new(channel: usize, free: bool) -> Self {
        Self { channel, free }
    }
}

/// Finite mixture of availability vectors: `f(θ) = Σ_a w_a δ(θ_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior<S = f64> {
    atoms: Vec<Vec<S>>,
    weights: Vec<S>,
}

pub type ExactPrior = DiscretePrior<Rational>;

impl<S: Scalar> DiscretePrior<S> {
    pub fn new(atoms: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPrior("need at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidPrior(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let n = atoms[0].len();
        if n == 0 {
            return Err(Error::InvalidPrior("atoms must have at least one channel".into()));
        }
        for atom in &atoms {
            if atom.len() != n {
                return Err(Error::InvalidPrior("atoms differ in length".into()));
            }
            if atom.iter().any(|t| *t < S::zero() || *t > S::one()) {
                return Err(Error::InvalidPrior(format!(
                    "atom entry outside [0, 1] in {atom:?}"
                )));
            }
        }
        if weights.iter().any(|w| *w < S::zero()) {
            return Err(Error::InvalidPrior("negative weight".into()));
        }
        let total = weights.iter().cloned().fold(S::zero(), |a, b| a + b);
        if !total.tie_eq(&S::one()) {
            return Err(Error::InvalidPrior(format!(
                "weights sum to {} instead of 1",
                total.to_f64()
            )));
        }
        Ok(Self { atoms, weights })
    }

    /// Prior concentrated on a single availability vector.
    pub fn point_mass(theta: Vec<S>) -> Result<Self> {
        Self::new(vec![theta], vec![S::one()])
    }

    pub fn num_channels(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[Vec<S>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    fn check_channel(&self, channel: usize) -> Result<()> {
        if channel >= self.num_channels() {
            return Err(Error::ChannelOutOfRange {
                channel,
                channels: self.num_channels(),
            });
        }
        Ok(())
    }

    /// Probability that `channel` is found free in the next slot.
    pub fn expected_availability(&self, channel: usize) -> Result<S> {
        self.check_channel(channel)?;
        Ok(self
            .atoms
            .iter()
            .zip(&self.weights)
            .fold(S::zero(), |acc, (atom, w)| acc + w.clone() * atom[channel].clone()))
    }

    /// Availability of every channel under the current weights.
    pub fn availabilities(&self) -> Vec<S> {
        (0..self.num_channels())
            .map(|c| self.expected_availability(c).expect("in range"))
            .collect()
    }

    /// One Bayesian step after sensing `outcome`.
    pub fn posterior_update(&self, outcome: SensingOutcome) -> Result<Self> {
        self.check_channel(outcome.channel)?;
        let lik: Vec<S> = self
            .atoms
            .iter()
            .map(|atom| {
                let theta = atom[outcome.channel].clone();
                if outcome.free {
                    theta
                } else {
                    S::one() - theta
                }
            })
            .collect();
        let weights = S::reweight(&self.weights, &lik).ok_or(Error::ZeroLikelihood)?;
        Ok(Self {
            atoms: self.atoms.clone(),
            weights,
        })
    }

    /// Posterior after any history whose per-channel counts are `counts`.
    pub fn posterior_from_counts(&self, counts: &ObservationCounts) -> Result<Self> {
        if counts.num_channels() != self.num_channels() {
            return Err(Error::InvalidArgument(format!(
                "counts cover {} channels, prior has {}",
                counts.num_channels(),
                self.num_channels()
            )));
        }
        if counts.total_sensed() == 0 {
            return Ok(self.clone());
        }
        let weights = S::posterior_weights(&self.weights, &self.atoms, &counts.free, &counts.sensed)
            .ok_or(Error::ZeroLikelihood)?;
        Ok(Self {
            atoms: self.atoms.clone(),
            weights,
        })
    }

    /// Prior over a single channel's availability, merging equal atoms.
    pub fn marginal(&self, channel: usize) -> Result<Self> {
        self.check_channel(channel)?;
        let mut atoms: Vec<Vec<S>> = Vec::new();
        let mut weights: Vec<S> = Vec::new();
        for (atom, w) in self.atoms.iter().zip(&self.weights) {
            let v = &atom[channel];
            match atoms.iter().position(|a| a[0] == *v) {
                Some(pos) => weights[pos] = weights[pos].clone() + w.clone(),
                None => {
                    atoms.push(vec![v.clone()]);
                    weights.push(w.clone());
                }
            }
        }
        Ok(Self { atoms, weights })
    }

    pub fn to_f64(&self) -> DiscretePrior<f64> {
        DiscretePrior {
            atoms: self
                .atoms
                .iter()
                .map(|a| a.iter().map(Scalar::to_f64).collect())
                .collect(),
            weights: self.weights.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Draws the availability vector for a new block.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> ThetaVector {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = self.atoms.len() - 1;
        for (a, w) in self.weights.iter().enumerate() {
            acc += w.to_f64();
            if u < acc {
                chosen = a;
                break;
            }
        }
        ThetaVector(self.atoms[chosen].iter().map(Scalar::to_f64).collect())
    }
}

impl DiscretePrior<f64> {
    /// Exact counterpart, reading each float through its shortest decimal form.
    pub fn to_exact(&self) -> Result<ExactPrior> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| a.iter().map(|&v| Rational::from_f64(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut weights = self
            .weights
            .iter()
            .map(|&v| Rational::from_f64(v))
            .collect::<Result<Vec<_>>>()?;
        let total = weights.iter().cloned().fold(Rational::from_u64(0), |a, b| a + b);
        for w in &mut weights {
            *w = w.clone() / total.clone();
        }
        DiscretePrior::new(atoms, weights)
    }
}

impl From<&ThetaVector> for DiscretePrior<f64> {
    fn from(theta: &ThetaVector) -> Self {
        DiscretePrior {
            atoms: vec![theta.0.clone()],
            weights: vec![1.0],
        }
    }
}

/// Per-channel free counts `X_i` and sensing counts `Y_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservationCounts {
    free: Vec<u32>,
    sensed: Vec<u32>,
}

impl ObservationCounts {
    pub fn new(channels: usize) -> Self {
        Self {
            free: vec![0; channels],
            sensed: vec![0; channels],
        }
    }

    pub fn from_pairs(pairs: &[(u32, u32)]) -> Result<Self> {
        if let Some(&(x, y)) = pairs.iter().find(|(x, y)| x > y) {
            return Err(Error::InvalidArgument(format!(
                "free count {x} exceeds sense count {y}"
            )));
        }
        Ok(Self {
            free: pairs.iter().map(|p| p.0).collect(),
            sensed: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn from_history(channels: usize, history: &History) -> Self {
        let mut counts = Self::new(channels);
        for entry in history.entries() {
            for o in &entry.outcomes {
                counts.record(*o);
            }
        }
        counts
    }

    pub fn num_channels(&self) -> usize {
        self.free.len()
    }

    pub fn free(&self, channel: usize) -> u32 {
        self.free[channel]
    }

    pub fn sensed(&self, channel: usize) -> u32 {
        self.sensed[channel]
    }

    pub fn free_counts(&self) -> &[u32] {
        &self.free
    }

    pub fn sense_counts(&self) -> &[u32] {
        &self.sensed
    }

    pub fn total_sensed(&self) -> u64 {
        self.sensed.iter().map(|&y| y as u64).sum()
    }

    pub fn record(&mut self, outcome: SensingOutcome) {
        self.sensed[outcome.channel] += 1;
        if outcome.free {
            self.free[outcome.channel] += 1;
        }
    }

    /// Copy with one more observation.
    pub fn with(&self, outcome: SensingOutcome) -> Self {
        let mut next = self.clone();
        next.record(outcome);
        next
    }

    /// Overwrites one channel's counts. Used by strategies whose
    /// initialization forces a value.
    pub fn set(&mut self, channel: usize, free: u32, sensed: u32) {
        assert!(free <= sensed, "free count exceeds sense count");
        self.free[channel] = free;
        self.sensed[channel] = sensed;
    }

    /// Empirical availability `X_i / Y_i`.
    pub fn estimate(&self, channel: usize) -> Option<f64> {
        match self.sensed[channel] {
            0 => None,
            y => Some(self.free[channel] as f64 / y as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub slot: u64,
    pub outcomes: Vec<SensingOutcome>,
}

/// Causal record of choices and sensing results within a block.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct History {
    per_slot: usize,
    entries: Vec<HistoryEntry>,
}

impl History {
    /// `per_slot` is the number of channels sensed simultaneously.
    pub fn new(per_slot: usize) -> Self {
        Self {
            per_slot,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, slot: u64, outcomes: Vec<SensingOutcome>) -> Result<()> {
        let expected = self.entries.last().map_or(1, |e| e.slot + 1);
        if slot != expected {
            return Err(Error::InvalidHistory(format!(
                "slot {slot} follows slot {}",
                expected - 1
            )));
        }
        if outcomes.len() > self.per_slot {
            return Err(Error::InvalidHistory(format!(
                "{} outcomes in slot {slot}, at most {} allowed",
                outcomes.len(),
                self.per_slot
            )));
        }
        self.entries.push(HistoryEntry { slot, outcomes });
        Ok(())
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Draws one slot of primary traffic: `true` where the channel is free.
pub fn sample_slot<R: Rng + ?Sized>(theta: &ThetaVector, rng: &mut R) -> Vec<bool> {
    let mut out = vec![false; theta.len()];
    sample_slot_into(theta, rng, &mut out);
    out
}

/// Allocation-free variant of [`sample_slot`]. Always consumes exactly one
/// uniform draw per channel.
pub fn sample_slot_into<R: Rng + ?Sized>(theta: &ThetaVector, rng: &mut R, out: &mut [bool]) {
    for (slot, &p) in out.iter_mut().zip(theta.as_slice()) {
        let u: f64 = rng.gen();
        *slot = u < p;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use num::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    pub(crate) fn example1() -> ExactPrior {
        DiscretePrior::new(
            vec![vec![q(1, 10), q(0, 1)], vec![q(4, 5), q(1, 1)]],
            vec![q(4, 5), q(1, 5)],
        )
        .unwrap()
    }

    #[test]
    fn theta_validation() {
        assert!(ThetaVector::new(vec![]).is_err());
        assert!(ThetaVector::new(vec![0.5, 1.2]).is_err());
        assert!(ThetaVector::new(vec![-0.1]).is_err());
        assert!(ThetaVector::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn theta_serde_validates() {
        let t: ThetaVector = serde_json::from_str("[0.1, 0.9]").unwrap();
        assert_eq!(t.ranked(), vec![1, 0]);
        assert!(serde_json::from_str::<ThetaVector>("[1.5]").is_err());
    }

    #[test]
    fn prior_validation() {
        assert!(DiscretePrior::<f64>::new(vec![], vec![]).is_err());
        assert!(DiscretePrior::new(vec![vec![0.1], vec![0.2, 0.3]], vec![0.5, 0.5]).is_err());
        assert!(DiscretePrior::new(vec![vec![0.1], vec![0.2]], vec![0.5, 0.6]).is_err());
        assert!(DiscretePrior::new(vec![vec![0.1], vec![0.2]], vec![-0.5, 1.5]).is_err());
        assert!(DiscretePrior::new(vec![vec![1.1]], vec![1.0]).is_err());
        assert!(DiscretePrior::new(vec![vec![0.1], vec![0.2]], vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn example1_availability() {
        let p = example1();
        assert_eq!(p.expected_availability(0).unwrap(), q(6, 25));
        assert_eq!(p.expected_availability(1).unwrap(), q(1, 5));
        assert!(matches!(
            p.expected_availability(2),
            Err(Error::ChannelOutOfRange { .. })
        ));
        let pm = DiscretePrior::point_mass(vec![0.3, 0.7]).unwrap();
        assert_eq!(pm.expected_availability(1).unwrap(), 0.7);
    }

    #[test]
    fn example1_posterior_updates() {
        let p = example1();
        let free1 = p.posterior_update(SensingOutcome::new(0, true)).unwrap();
        assert_eq!(free1.weights(), &[q(1, 3), q(2, 3)]);
        let busy1 = p.posterior_update(SensingOutcome::new(0, false)).unwrap();
        assert_eq!(busy1.weights(), &[q(18, 19), q(1, 19)]);
        let free2 = p.posterior_update(SensingOutcome::new(1, true)).unwrap();
        assert_eq!(free2.weights(), &[q(0, 1), q(1, 1)]);
        let busy2 = p.posterior_update(SensingOutcome::new(1, false)).unwrap();
        assert_eq!(busy2.weights(), &[q(1, 1), q(0, 1)]);
        assert_eq!(free1.atoms(), p.atoms());
    }

    #[test]
    fn zero_likelihood_is_an_error() {
        let p = example1().posterior_update(SensingOutcome::new(1, true)).unwrap();
        // Every remaining atom says channel 2 is always free.
        assert_eq!(
            p.posterior_update(SensingOutcome::new(1, false)),
            Err(Error::ZeroLikelihood)
        );
        let counts = ObservationCounts::from_pairs(&[(0, 0), (0, 1)]).unwrap();
        assert_eq!(p.posterior_from_counts(&counts), Err(Error::ZeroLikelihood));
    }

    #[test]
    fn point_mass_is_fixed_point() {
        let p = DiscretePrior::point_mass(vec![q(3, 10), q(7, 10)]).unwrap();
        for o in [SensingOutcome::new(0, true), SensingOutcome::new(1, false)] {
            assert_eq!(p.posterior_update(o).unwrap(), p);
        }
    }

    #[test]
    fn counts_match_single_and_double_updates() {
        let p = example1();
        let zero = ObservationCounts::new(2);
        assert_eq!(p.posterior_from_counts(&zero).unwrap(), p);
        let one = ObservationCounts::from_pairs(&[(1, 1), (0, 0)]).unwrap();
        assert_eq!(p.posterior_from_counts(&one).unwrap().weights(), &[q(1, 3), q(2, 3)]);
        let two = ObservationCounts::from_pairs(&[(1, 2), (0, 0)]).unwrap();
        let seq = p
            .posterior_update(SensingOutcome::new(0, true))
            .unwrap()
            .posterior_update(SensingOutcome::new(0, false))
            .unwrap();
        assert_eq!(p.posterior_from_counts(&two).unwrap(), seq);
    }

    /// Every ordering of every outcome multiset with Y_i <= 4 per channel
    /// must give the batched posterior.
    #[test]
    fn exchangeability_exhaustive() {
        let p = DiscretePrior::new(
            vec![
                vec![q(1, 5), q(2, 3)],
                vec![q(3, 4), q(1, 10)],
                vec![q(1, 2), q(1, 2)],
            ],
            vec![q(1, 6), q(1, 2), q(1, 3)],
        )
        .unwrap();
        // Sequences over the 4 possible outcomes, length up to 4.
        let alphabet = [
            SensingOutcome::new(0, true),
            SensingOutcome::new(0, false),
            SensingOutcome::new(1, true),
            SensingOutcome::new(1, false),
        ];
        let mut checked = 0;
        for len in 0..=4u32 {
            for code in 0..4usize.pow(len) {
                let mut c = code;
                let mut seq = Vec::new();
                for _ in 0..len {
                    seq.push(alphabet[c % 4]);
                    c /= 4;
                }
                let mut counts = ObservationCounts::new(2);
                let mut post = p.clone();
                for o in &seq {
                    counts.record(*o);
                    post = post.posterior_update(*o).unwrap();
                }
                assert_eq!(p.posterior_from_counts(&counts).unwrap(), post, "{seq:?}");
                checked += 1;
            }
        }
        assert_eq!(checked, 1 + 4 + 16 + 64 + 256);
    }

    #[test]
    fn float_counts_close_to_sequential() {
        let p = example1().to_f64();
        let mut post = p.clone();
        let seq = [(0, true), (0, false), (0, false), (0, true), (1, true)];
        let mut counts = ObservationCounts::new(2);
        for (ch, free) in seq {
            let o = SensingOutcome::new(ch, free);
            post = post.posterior_update(o).unwrap();
            counts.record(o);
        }
        let batch = p.posterior_from_counts(&counts).unwrap();
        for (a, b) in post.weights().iter().zip(batch.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_merges_equal_atoms() {
        let p = DiscretePrior::new(
            vec![vec![0.2, 0.5], vec![0.8, 0.5], vec![0.2, 0.9]],
            vec![0.25, 0.25, 0.5],
        )
        .unwrap();
        let m0 = p.marginal(0).unwrap();
        assert_eq!(m0.atoms(), &[vec![0.2], vec![0.8]]);
        assert_eq!(m0.weights(), &[0.75, 0.25]);
        let m1 = p.marginal(1).unwrap();
        assert_eq!(m1.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn to_exact_reads_decimals() {
        let p = DiscretePrior::new(vec![vec![0.1, 0.0], vec![0.8, 1.0]], vec![0.8, 0.2]).unwrap();
        assert_eq!(p.to_exact().unwrap(), example1());
    }

    #[test]
    fn history_invariants() {
        let mut h = History::new(1);
        h.push(1, vec![SensingOutcome::new(0, true)]).unwrap();
        assert!(h.push(3, vec![]).is_err());
        assert!(h
            .push(2, vec![SensingOutcome::new(0, true), SensingOutcome::new(1, true)])
            .is_err());
        h.push(2, vec![SensingOutcome::new(1, false)]).unwrap();
        let c = ObservationCounts::from_history(2, &h);
        assert_eq!((c.free(0), c.sensed(0), c.free(1), c.sensed(1)), (1, 1, 0, 1));
    }

    #[test]
    fn sample_theta_single_atom() {
        let p = DiscretePrior::point_mass(vec![0.3, 0.7]).unwrap();
        let mut rng = RngSeed::new(1, 0).rng();
        for _ in 0..100 {
            assert_eq!(p.sample_theta(&mut rng).as_slice(), &[0.3, 0.7]);
        }
    }

    #[test]
    fn sample_theta_example1_frequency() {
        let p = example1();
        let mut rng = RngSeed::new(11, 0).rng();
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| p.sample_theta(&mut rng).as_slice() == [0.1, 0.0])
            .count();
        assert!((hits as f64 / n as f64 - 0.8).abs() < 0.01);
    }

    #[test]
    fn sample_theta_equal_weights() {
        let p = DiscretePrior::new(vec![vec![0.2], vec![0.6]], vec![0.5, 0.5]).unwrap();
        let mut rng = RngSeed::new(12, 0).rng();
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| p.sample_theta(&mut rng).get(0) == 0.2)
            .count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sample_slot_extremes_and_rate() {
        let theta = ThetaVector::new(vec![1.0, 0.0, 0.5]).unwrap();
        let mut rng = RngSeed::new(5, 0).rng();
        let n = 100_000;
        let mut free = 0;
        for _ in 0..n {
            let s = sample_slot(&theta, &mut rng);
            assert!(s[0]);
            assert!(!s[1]);
            free += s[2] as usize;
        }
        // 3 sigma of Binomial(1e5, 0.5) is about 0.0047.
        let rate = free as f64 / n as f64;
        assert!((rate - 0.5).abs() < 3.0 * (0.25f64 / n as f64).sqrt());
    }
}
