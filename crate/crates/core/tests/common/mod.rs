//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls into the dynamic-programming or index code paths it
//! is used to check.

#![allow(dead_code)]

use bml_core::scalar::Rational;
use bml_core::{DiscretePrior, RngSeed};
use num::BigInt;
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Two-atom, two-channel prior whose entries are multiples of `1/den`.
#[derive(Debug, Clone, Copy)]
pub struct GridPrior {
    pub den: u32,
    /// `theta[a][i]` numerators.
    pub theta: [[u32; 2]; 2],
    /// Weight numerator of atom 0; atom 1 gets `den - w0`.
    pub w0: u32,
}

impl GridPrior {
    pub fn random<R: Rng>(rng: &mut R, den: u32, known_second: bool) -> Self {
        let mut theta = [[0; 2]; 2];
        for atom in &mut theta {
            for t in atom.iter_mut() {
                *t = rng.gen_range(0..=den);
            }
        }
        if known_second {
            theta[1][1] = theta[0][1];
        }
        Self {
            den,
            theta,
            w0: rng.gen_range(1..den),
        }
    }

    pub fn exact(&self) -> DiscretePrior<Rational> {
        let d = self.den as i64;
        DiscretePrior::new(
            self.theta
                .iter()
                .map(|a| a.iter().map(|&t| q(t as i64, d)).collect())
                .collect(),
            vec![q(self.w0 as i64, d), q((self.den - self.w0) as i64, d)],
        )
        .unwrap()
    }

    pub fn float(&self) -> DiscretePrior<f64> {
        self.exact().to_f64()
    }
}

/// Value of the best deterministic history-dependent strategy, found by
/// enumerating every strategy tree over two channels.
///
/// A deterministic strategy is a channel choice at each node of the binary
/// outcome tree (`2^T - 1` nodes), so there are `2^(2^T - 1)` strategies.
/// Values are accumulated as integers scaled by `den^(T+1)`, so the
/// result is exact. Bandwidth is 1 bit per free slot.
pub fn exhaustive_best_value(prior: &GridPrior, horizon: u32) -> Rational {
    assert!(horizon <= 4, "strategy space too large");
    if horizon == 0 {
        return q(0, 1);
    }
    let den = prior.den as i128;
    let nodes = (1usize << horizon) - 1;
    let weights = [prior.w0 as i128, (prior.den - prior.w0) as i128];
    let mut best: Option<i128> = None;
    for strategy in 0u64..(1u64 << nodes) {
        let mut total: i128 = 0;
        for (a, w) in weights.iter().enumerate() {
            if *w == 0 {
                continue;
            }
            // Depth-first walk carrying the scaled reach probability.
            let mut stack = vec![(0u32, 0usize, 1i128)];
            while let Some((depth, path, reach)) = stack.pop() {
                let node = (1usize << depth) - 1 + path;
                let channel = ((strategy >> node) & 1) as usize;
                let t = prior.theta[a][channel] as i128;
                let scale = den.pow(horizon - depth - 1);
                total += w * reach * t * scale;
                if depth + 1 < horizon {
                    stack.push((depth + 1, path * 2 + 1, reach * t));
                    stack.push((depth + 1, path * 2, reach * (den - t)));
                }
            }
        }
        best = Some(best.map_or(total, |b| b.max(total)));
    }
    Rational::new(
        BigInt::from(best.unwrap()),
        BigInt::from(den.pow(horizon + 1)),
    )
}

/// Seeded generator for test fixtures.
pub fn test_rng(seed: u64) -> bml_core::SimRng {
    RngSeed::new(seed, 0).rng()
}

/// Two-arm discounted DP against a known arm of rate `known`, allowing
/// free switching in both directions, truncated after `horizon` slots.
/// Returns `(value of sensing the unknown arm first, value of sensing the
/// known arm first)` at the root.
pub fn discounted_two_arm_root(
    atoms: &[f64],
    weights: &[f64],
    known: f64,
    alpha: f64,
    horizon: usize,
) -> (f64, f64) {
    let avail = |x: usize, y: usize| -> f64 {
        let lik: Vec<f64> = atoms
            .iter()
            .zip(weights)
            .map(|(&t, &w)| {
                let mut l = w.ln();
                if x > 0 {
                    l += x as f64 * t.ln();
                }
                if y > x {
                    l += (y - x) as f64 * (1.0 - t).ln();
                }
                l
            })
            .collect();
        let m = lik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return 0.0;
        }
        let e: Vec<f64> = lik.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().zip(atoms).map(|(e, t)| e * t).sum::<f64>() / z
    };
    // v[t][y][x]: value with t slots elapsed and unknown-arm counts (x, y).
    let mut next: Vec<Vec<f64>> = vec![vec![0.0; horizon + 2]; horizon + 2];
    let mut root = (0.0, 0.0);
    for t in (0..horizon).rev() {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; horizon + 2]; horizon + 2];
        for y in 0..=t {
            for x in 0..=y {
                let p = avail(x, y);
                let unknown = p + alpha * (p * next[y + 1][x + 1] + (1.0 - p) * next[y + 1][x]);
                let known_v = known + alpha * next[y][x];
                cur[y][x] = unknown.max(known_v);
                if t == 0 {
                    root = (unknown, known_v);
                }
            }
        }
        next = cur;
    }
    root
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest violation of the optimality conditions for `K` users sharing
/// channels through the mixed strategy `p`: `p` must lie on the simplex,
/// and `θ_i (1 - p_i)^(K-1)` must be equal on the support and no larger
/// off it.
pub fn kkt_residual(theta: &[f64], users: u32, p: &[f64]) -> f64 {
    let marginal: Vec<f64> = theta
        .iter()
        .zip(p)
        .map(|(t, pi)| t * (1.0 - pi).powi(users as i32 - 1))
        .collect();
    let lambda = marginal.iter().cloned().fold(f64::MIN, f64::max);
    let mut worst = (p.iter().sum::<f64>() - 1.0).abs();
    for (g, &pi) in marginal.iter().zip(p) {
        worst = worst.max(-pi);
        if pi > 1e-12 {
            worst = worst.max(lambda - g);
        }
    }
    worst
}

/// Bernoulli relative entropy `D(a || b)` in nats.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(a, b) + term(1.0 - a, 1.0 - b)
}
