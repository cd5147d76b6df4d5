//! Exact finite-horizon backward induction over posterior count states.
//!
//! Posterior states are keyed by per-channel `(X_i, Y_i)` counts together
//! with the remaining horizon. Under a finite-mixture prior the likelihood
//! factorizes over channels, so the counts are a sufficient statistic and
//! memoization on them is exact.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DiscretePrior, ObservationCounts, SensingOutcome};
use crate::scalar::Scalar;

pub const DEFAULT_STATE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpOptions {
    /// Channels sensed per slot.
    pub sense_per_slot: usize,
    /// Maximum number of memoized states before giving up.
    pub state_cap: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            sense_per_slot: 1,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateKey {
    pub counts: ObservationCounts,
    pub remaining: u32,
}

/// Expected value of one candidate action at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValue<S> {
    pub channels: Vec<usize>,
    pub value: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateEntry<S> {
    pub value: S,
    pub actions: Vec<ActionValue<S>>,
    /// Indices into `actions` attaining the maximum.
    pub best: Vec<usize>,
}

/// Argmax action at a state together with every tied alternative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptimalAction {
    pub channels: Vec<usize>,
    pub ties: Vec<Vec<usize>>,
}

impl OptimalAction {
    /// The single channel when one channel is sensed per slot.
    pub fn channel(&self) -> usize {
        self.channels[0]
    }
}

/// Memoized optimal values and actions for every reachable state.
#[derive(Debug, Clone)]
pub struct ValueTable<S> {
    prior: DiscretePrior<S>,
    bandwidth: S,
    horizon: u32,
    options: DpOptions,
    action_sets: Vec<Vec<usize>>,
    entries: HashMap<StateKey, StateEntry<S>>,
}

/// Builds the optimal value table for `horizon` slots.
pub fn optimal_value<S: Scalar>(
    prior: &DiscretePrior<S>,
    horizon: u32,
    bandwidth: S,
    options: DpOptions,
) -> Result<ValueTable<S>> {
    let n = prior.num_channels();
    if options.sense_per_slot == 0 || options.sense_per_slot > n {
        return Err(Error::InvalidArgument(format!(
            "cannot sense {} of {n} channels per slot",
            options.sense_per_slot
        )));
    }
    let mut table = ValueTable {
        prior: prior.clone(),
        bandwidth,
        horizon,
        options,
        action_sets: combinations(n, options.sense_per_slot),
        entries: HashMap::new(),
    };
    table.solve(&ObservationCounts::new(n), horizon)?;
    Ok(table)
}

impl<S: Scalar> ValueTable<S> {
    /// `V*(f, T)` at the root.
    pub fn value(&self) -> S {
        self.entry(&ObservationCounts::new(self.prior.num_channels()), self.horizon)
            .map(|e| e.value.clone())
            .unwrap_or_else(S::zero)
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn prior(&self) -> &DiscretePrior<S> {
        &self.prior
    }

    pub fn bandwidth(&self) -> &S {
        &self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, counts: &ObservationCounts, remaining: u32) -> Option<&StateEntry<S>> {
        self.entries.get(&StateKey {
            counts: counts.clone(),
            remaining,
        })
    }

    pub fn states(&self) -> impl Iterator<Item = (&StateKey, &StateEntry<S>)> {
        self.entries.iter()
    }

    /// Optimal action at a state reached with `remaining` slots to go.
    pub fn optimal_action(
        &self,
        counts: &ObservationCounts,
        remaining: u32,
    ) -> Result<OptimalAction> {
        let entry = self.entry(counts, remaining).ok_or(Error::UnknownState)?;
        if entry.best.is_empty() {
            return Err(Error::UnknownState);
        }
        let ties: Vec<Vec<usize>> = entry
            .best
            .iter()
            .map(|&b| entry.actions[b].channels.clone())
            .collect();
        Ok(OptimalAction {
            channels: ties[0].clone(),
            ties,
        })
    }

    /// Successor states and their probabilities after sensing `channels`.
    ///
    /// Outcomes with zero probability are omitted.
    pub fn transitions(
        &self,
        counts: &ObservationCounts,
        channels: &[usize],
    ) -> Result<Vec<(Vec<SensingOutcome>, S)>> {
        let post = self.prior.posterior_from_counts(counts)?;
        Ok(outcome_patterns(&post, channels))
    }

    fn solve(&mut self, counts: &ObservationCounts, remaining: u32) -> Result<S> {
        let key = StateKey {
            counts: counts.clone(),
            remaining,
        };
        if let Some(e) = self.entries.get(&key) {
            return Ok(e.value.clone());
        }
        let entry = if remaining == 0 {
            StateEntry {
                value: S::zero(),
                actions: Vec::new(),
                best: Vec::new(),
            }
        } else {
            let post = self.prior.posterior_from_counts(counts)?;
            let avail = post.availabilities();
            let mut actions = Vec::with_capacity(self.action_sets.len());
            for set in self.action_sets.clone() {
                let immediate = set
                    .iter()
                    .fold(S::zero(), |acc, &c| acc + avail[c].clone());
                let mut value = self.bandwidth.clone() * immediate;
                for (outcomes, prob) in outcome_patterns(&post, &set) {
                    let next = outcomes.iter().fold(counts.clone(), |c, o| c.with(*o));
                    let cont = self.solve(&next, remaining - 1)?;
                    value = value + prob * cont;
                }
                actions.push(ActionValue {
                    channels: set,
                    value,
                });
            }
            let best = argmax_ties(actions.iter().map(|a| &a.value));
            StateEntry {
                value: actions[best[0]].value.clone(),
                actions,
                best,
            }
        };
        let value = entry.value.clone();
        self.entries.insert(key, entry);
        if self.entries.len() > self.options.state_cap {
            return Err(Error::StateSpaceExceeded {
                cap: self.options.state_cap,
            });
        }
        Ok(value)
    }

    /// Optimal policy as a nested tree, following the first tied action.
    pub fn policy_tree(&self, max_depth: u32) -> PolicyNode {
        let root = ObservationCounts::new(self.prior.num_channels());
        self.policy_node(&root, self.horizon, 1, max_depth)
    }

    fn policy_node(
        &self,
        counts: &ObservationCounts,
        remaining: u32,
        slot: u32,
        max_depth: u32,
    ) -> PolicyNode {
        let entry = self.entry(counts, remaining).expect("reachable state");
        let mut node = PolicyNode {
            slot,
            channels: Vec::new(),
            ties: Vec::new(),
            value: entry.value.to_f64(),
            children: Vec::new(),
        };
        if remaining == 0 || slot > max_depth {
            return node;
        }
        let action = self.optimal_action(counts, remaining).expect("solved state");
        node.channels = action.channels.iter().map(|c| c + 1).collect();
        node.ties = action
            .ties
            .iter()
            .map(|t| t.iter().map(|c| c + 1).collect())
            .collect();
        for (outcomes, prob) in self.transitions(counts, &action.channels).expect("reachable") {
            let next = outcomes.iter().fold(counts.clone(), |c, o| c.with(*o));
            node.children.push(PolicyBranch {
                free: outcomes.iter().map(|o| o.free).collect(),
                probability: prob.to_f64(),
                next: self.policy_node(&next, remaining - 1, slot + 1, max_depth),
            });
        }
        node
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyNode {
    pub slot: u32,
    /// 1-based channels sensed at this node; empty at leaves.
    pub channels: Vec<usize>,
    pub ties: Vec<Vec<usize>>,
    pub value: f64,
    pub children: Vec<PolicyBranch>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyBranch {
    pub free: Vec<bool>,
    pub probability: f64,
    pub next: PolicyNode,
}

/// Joint outcome patterns over `channels` with nonzero probability.
fn outcome_patterns<S: Scalar>(
    post: &DiscretePrior<S>,
    channels: &[usize],
) -> Vec<(Vec<SensingOutcome>, S)> {
    let mut out = Vec::with_capacity(1 << channels.len());
    for mask in 0..(1u32 << channels.len()) {
        let outcomes: Vec<SensingOutcome> = channels
            .iter()
            .enumerate()
            .map(|(k, &c)| SensingOutcome::new(c, mask & (1 << k) != 0))
            .collect();
        let prob = post
            .atoms()
            .iter()
            .zip(post.weights())
            .fold(S::zero(), |acc, (atom, w)| {
                let lik = outcomes.iter().fold(S::one(), |l, o| {
                    let t = atom[o.channel].clone();
                    l * if o.free { t } else { S::one() - t }
                });
                acc + w.clone() * lik
            });
        if !prob.is_zero() {
            out.push((outcomes, prob));
        }
    }
    out
}

/// Indices attaining the maximum, using [`Scalar::tie_eq`].
pub fn argmax_ties<'a, S: Scalar>(values: impl Iterator<Item = &'a S>) -> Vec<usize> {
    let values: Vec<&S> = values.collect();
    let Some(best) = values
        .iter()
        .copied()
        .reduce(|a, b| if b > a { b } else { a })
    else {
        return Vec::new();
    };
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.tie_eq(best))
        .map(|(i, _)| i)
        .collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Value of sensing the a-priori best channels every slot without using
/// any observation: `B T max_i E_f[θ_i]` (top-`m` sum when sensing `m`).
pub fn static_myopic_value<S: Scalar>(
    prior: &DiscretePrior<S>,
    horizon: u32,
    bandwidth: S,
    sense_per_slot: usize,
) -> S {
    let mut avail = prior.availabilities();
    avail.sort_by(|a, b| b.partial_cmp(a).expect("comparable"));
    let top = avail
        .into_iter()
        .take(sense_per_slot)
        .fold(S::zero(), |a, b| a + b);
    bandwidth * S::from_u64(horizon as u64) * top
}

/// Expected value of the Bayesian myopic rule (sense the channel with the
/// highest posterior availability, ties split uniformly) over `horizon` slots.
pub fn bayes_myopic_value<S: Scalar>(
    prior: &DiscretePrior<S>,
    horizon: u32,
    bandwidth: S,
) -> Result<S> {
    fn rec<S: Scalar>(
        prior: &DiscretePrior<S>,
        counts: &ObservationCounts,
        remaining: u32,
        bandwidth: &S,
        memo: &mut HashMap<ObservationCounts, S>,
    ) -> Result<S> {
        if remaining == 0 {
            return Ok(S::zero());
        }
        if let Some(v) = memo.get(counts) {
            return Ok(v.clone());
        }
        let post = prior.posterior_from_counts(counts)?;
        let avail = post.availabilities();
        let ties = argmax_ties(avail.iter());
        let mut total = S::zero();
        for &c in &ties {
            let p = avail[c].clone();
            let mut v = bandwidth.clone() * p.clone();
            if !p.is_zero() {
                let next = counts.with(SensingOutcome::new(c, true));
                v = v + p.clone() * rec(prior, &next, remaining - 1, bandwidth, memo)?;
            }
            let q = S::one() - p;
            if !q.is_zero() {
                let next = counts.with(SensingOutcome::new(c, false));
                v = v + q * rec(prior, &next, remaining - 1, bandwidth, memo)?;
            }
            total = total + v;
        }
        let value = total / S::from_u64(ties.len() as u64);
        memo.insert(counts.clone(), value.clone());
        Ok(value)
    }
    let mut memo = HashMap::new();
    rec(
        prior,
        &ObservationCounts::new(prior.num_channels()),
        horizon,
        &bandwidth,
        &mut memo,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn example1() -> DiscretePrior<Rational> {
        DiscretePrior::new(
            vec![vec![q(1, 10), q(0, 1)], vec![q(4, 5), q(1, 1)]],
            vec![q(4, 5), q(1, 5)],
        )
        .unwrap()
    }

    #[test]
    fn example1_values() {
        let p = example1();
        let t1 = optimal_value(&p, 1, q(100, 1), DpOptions::default()).unwrap();
        assert_eq!(t1.value(), q(24, 1));
        let t2 = optimal_value(&p, 2, q(100, 1), DpOptions::default()).unwrap();
        assert_eq!(t2.value(), q(252, 5));
        let root = t2.entry(&ObservationCounts::new(2), 2).unwrap();
        assert_eq!(root.actions[0].value, q(252, 5));
        assert_eq!(root.actions[1].value, q(240, 5));
    }

    #[test]
    fn example1_intermediate_values() {
        let t2 = optimal_value(&example1(), 2, q(100, 1), DpOptions::default()).unwrap();
        let after = |pairs: &[(u32, u32)]| {
            t2.entry(&ObservationCounts::from_pairs(pairs).unwrap(), 1)
                .unwrap()
                .value
                .clone()
        };
        assert_eq!(after(&[(1, 1), (0, 0)]), q(200, 3));
        assert_eq!(after(&[(0, 1), (0, 0)]), q(260, 19));
        assert_eq!(after(&[(0, 0), (1, 1)]), q(100, 1));
        assert_eq!(after(&[(0, 0), (0, 1)]), q(10, 1));
    }

    #[test]
    fn example1_actions() {
        let t2 = optimal_value(&example1(), 2, q(100, 1), DpOptions::default()).unwrap();
        let root = ObservationCounts::new(2);
        assert_eq!(t2.optimal_action(&root, 2).unwrap().channel(), 0);
        let free = root.with(SensingOutcome::new(0, true));
        assert_eq!(t2.optimal_action(&free, 1).unwrap().channel(), 1);
        let busy = root.with(SensingOutcome::new(0, false));
        assert_eq!(t2.optimal_action(&busy, 1).unwrap().channel(), 0);
        assert_eq!(
            t2.optimal_action(&ObservationCounts::from_pairs(&[(3, 3), (0, 0)]).unwrap(), 1),
            Err(Error::UnknownState)
        );
    }

    #[test]
    fn example1_myopic_values() {
        let p = example1();
        assert_eq!(static_myopic_value(&p, 2, q(100, 1), 1), q(48, 1));
        // Updating the posterior after a free slot already finds the switch.
        assert_eq!(bayes_myopic_value(&p, 2, q(100, 1)).unwrap(), q(252, 5));
    }

    #[test]
    fn zero_horizon() {
        let t = optimal_value(&example1(), 0, q(100, 1), DpOptions::default()).unwrap();
        assert_eq!(t.value(), q(0, 1));
        assert!(matches!(
            t.optimal_action(&ObservationCounts::new(2), 0),
            Err(Error::UnknownState)
        ));
    }

    #[test]
    fn float_mode_matches_rational() {
        let pf = example1().to_f64();
        let t = optimal_value(&pf, 2, 100.0, DpOptions::default()).unwrap();
        assert!((t.value() - 50.4).abs() < 1e-10);
    }

    #[test]
    fn state_cap_is_enforced() {
        let p = DiscretePrior::new(vec![vec![0.2, 0.5, 0.7], vec![0.6, 0.3, 0.1]], vec![0.5, 0.5])
            .unwrap();
        let opts = DpOptions {
            state_cap: 50,
            ..DpOptions::default()
        };
        assert_eq!(
            optimal_value(&p, 8, 1.0, opts).unwrap_err(),
            Error::StateSpaceExceeded { cap: 50 }
        );
    }

    #[test]
    fn recursion_holds_state_by_state() {
        let p = DiscretePrior::new(
            vec![vec![q(1, 4), q(3, 5)], vec![q(7, 10), q(1, 5)]],
            vec![q(2, 5), q(3, 5)],
        )
        .unwrap();
        let t = optimal_value(&p, 5, q(1, 1), DpOptions::default()).unwrap();
        for (key, entry) in t.states() {
            if key.remaining == 0 {
                assert_eq!(entry.value, q(0, 1));
                continue;
            }
            let post = p.posterior_from_counts(&key.counts).unwrap();
            let mut best = None::<Rational>;
            for c in 0..2 {
                let pc = post.expected_availability(c).unwrap();
                let mut v = pc.clone();
                for free in [true, false] {
                    let pr = if free { pc.clone() } else { q(1, 1) - pc.clone() };
                    if pr == q(0, 1) {
                        continue;
                    }
                    let next = key.counts.with(SensingOutcome::new(c, free));
                    v = v + pr * t.entry(&next, key.remaining - 1).unwrap().value.clone();
                }
                best = Some(match best {
                    Some(b) if b >= v => b,
                    _ => v,
                });
            }
            assert_eq!(entry.value, best.unwrap());
        }
    }

    #[test]
    fn value_monotone_in_horizon() {
        let p = example1();
        let mut prev = q(0, 1);
        for h in 0..6 {
            let v = optimal_value(&p, h, q(1, 1), DpOptions::default()).unwrap().value();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn multi_channel_sensing_all_channels() {
        // Sensing every channel each slot leaves nothing to decide.
        let p = example1();
        let opts = DpOptions {
            sense_per_slot: 2,
            ..DpOptions::default()
        };
        let t = optimal_value(&p, 3, q(100, 1), opts).unwrap();
        assert_eq!(t.value(), q(3 * 44, 1));
        assert_eq!(t.optimal_action(&ObservationCounts::new(2), 3).unwrap().channels, vec![0, 1]);
    }

    #[test]
    fn combinations_enumerate() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 1), vec![vec![0], vec![1]]);
    }

    #[test]
    fn policy_tree_reports_one_based_channels() {
        let t = optimal_value(&example1(), 2, q(100, 1), DpOptions::default()).unwrap();
        let tree = t.policy_tree(2);
        assert_eq!(tree.channels, vec![1]);
        assert!((tree.value - 50.4).abs() < 1e-12);
        let free = tree.children.iter().find(|b| b.free == vec![true]).unwrap();
        assert_eq!(free.next.channels, vec![2]);
        let busy = tree.children.iter().find(|b| b.free == vec![false]).unwrap();
        assert_eq!(busy.next.channels, vec![1]);
    }
}
