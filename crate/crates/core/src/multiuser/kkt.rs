//! Symmetric mixed strategies under contention: the optimal split, its
//! throughput, and loss decay in the number of users.

use num::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ThetaVector;
use crate::scalar::Rational;

/// Probabilities of sensing each channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!("not a probability vector: {p:?}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, channel: usize) -> Self {
        let mut p = vec![0.0; n];
        p[channel] = 1.0;
        Self(p)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.0, rng)
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(m: MixedStrategy) -> Self {
        m.0
    }
}

/// Draws an index with probability proportional to `weights`.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktSolution {
    pub p: MixedStrategy,
    pub lambda: f64,
}

fn kkt_p(theta: &[f64], k: u32, lambda: f64) -> Vec<f64> {
    let e = 1.0 / (k as f64 - 1.0);
    theta
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                0.0
            } else {
                (1.0 - (lambda / (k as f64 * t)).powf(e)).max(0.0)
            }
        })
        .collect()
}

/// Symmetric strategy maximizing per-user throughput for `k` users:
/// `p_i = (1 − (λ/(Kθ_i))^{1/(K−1)})⁺` with `λ` set by bisection so the
/// probabilities sum to one. A single user plays the best channel.
pub fn kkt_optimal_mixed(theta: &ThetaVector, k: u32) -> Result<KktSolution> {
    if k == 0 {
        return Err(Error::InvalidArgument("at least one user is required".into()));
    }
    let best = theta.max();
    if best <= 0.0 {
        return Err(Error::AllChannelsBusy);
    }
    let n = theta.len();
    if k == 1 {
        let i = theta.ranked()[0];
        return Ok(KktSolution {
            p: MixedStrategy::pure(n, i),
            lambda: best,
        });
    }
    let th = theta.as_slice();
    let (mut lo, mut hi) = (0.0, k as f64 * best);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s: f64 = kkt_p(th, k, mid).iter().sum();
        if s > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (s - 1.0).abs() < 1e-14 {
            lo = mid;
            hi = mid;
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut p = kkt_p(th, k, lambda);
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    Ok(KktSolution {
        p: MixedStrategy(p),
        lambda,
    })
}

/// Exact optimal split for two users: `p_i = 1 − λ/(2θ_i)` on the active
/// set, found by dropping channels whose probability would be negative.
pub fn kkt_two_users_exact(theta: &[Rational]) -> Result<Vec<Rational>> {
    if theta.iter().all(|t| !t.is_positive()) {
        return Err(Error::AllChannelsBusy);
    }
    let mut active: Vec<bool> = theta.iter().map(|t| t.is_positive()).collect();
    loop {
        let m = active.iter().filter(|&&a| a).count() as i64;
        let inv_sum = theta
            .iter()
            .zip(&active)
            .filter(|(_, &a)| a)
            .fold(Rational::zero(), |acc, (t, _)| acc + t.recip());
        // Σ(1 − λ/(2θ_i)) = 1  ⇒  λ = 2(m − 1)/Σ 1/θ_i
        let lambda = Rational::from_integer((2 * (m - 1)).into()) / inv_sum;
        let p: Vec<Rational> = theta
            .iter()
            .zip(&active)
            .map(|(t, &a)| {
                if a {
                    Rational::from_integer(1.into()) - lambda.clone() / (Rational::from_integer(2.into()) * t)
                } else {
                    Rational::zero()
                }
            })
            .collect();
        match p.iter().position(|v| v.is_negative()) {
            Some(_) => {
                // Drop the weakest active channel and retry.
                let weakest = (0..theta.len())
                    .filter(|&i| active[i])
                    .min_by(|&a, &b| theta[a].cmp(&theta[b]))
                    .expect("active set is nonempty");
                active[weakest] = false;
            }
            None => return Ok(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Throughput {
    /// `BT Σ θ_i (1 − (1 − p_i)^K) / K`.
    pub per_user_w: f64,
    pub total_w: f64,
    /// `BT Σ θ_i (1 − p_i)^K`: opportunities nobody used.
    pub total_loss: f64,
    pub per_user_loss: f64,
    /// `BT Σ θ_i`.
    pub spectral_opportunity: f64,
}

/// Closed-form throughput of `k` users all playing `p`.
pub fn symmetric_throughput(theta: &ThetaVector, k: u32, p: &MixedStrategy, horizon: f64, bandwidth: f64) -> Result<Throughput> {
    if p.len() != theta.len() {
        return Err(Error::InvalidArgument("strategy and theta differ in length".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("at least one user is required".into()));
    }
    let bt = bandwidth * horizon;
    let mut used = 0.0;
    let mut unused = 0.0;
    let mut all = 0.0;
    for (&t, &pi) in theta.as_slice().iter().zip(p.probabilities()) {
        let idle = (1.0 - pi).powi(k as i32);
        used += t * (1.0 - idle);
        unused += t * idle;
        all += t;
    }
    let kf = k as f64;
    Ok(Throughput {
        per_user_w: bt * used / kf,
        total_w: bt * used,
        total_loss: bt * unused,
        per_user_loss: bt * unused / kf,
        spectral_opportunity: bt * all,
    })
}

/// Decay rates of the total loss in `K`: `c1 = ln(Q/(Q−1))` for the optimal
/// split over `Q` positive channels and `c2 = ln(Σθ/(Σθ − θ_min))` for the
/// proportional split. Infinite when only one channel is ever free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayConstants {
    pub q: usize,
    pub c1: f64,
    pub c2: f64,
}

pub fn decay_constants(theta: &ThetaVector) -> Result<DecayConstants> {
    let positive: Vec<f64> = theta.as_slice().iter().copied().filter(|&t| t > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::AllChannelsBusy);
    }
    let q = positive.len();
    let sum: f64 = positive.iter().sum();
    let min = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let (c1, c2) = if q == 1 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let qf = q as f64;
        ((qf / (qf - 1.0)).ln(), (sum / (sum - min)).ln())
    };
    Ok(DecayConstants { q, c1, c2 })
}

/// Per-slot win probability gained by one user who leaves the common
/// strategy `p` for the best fixed channel while the other `k − 1` users
/// keep playing `p`. Non-negative, since the common payoff averages the
/// pure ones.
pub fn mixed_deviation_gain(theta: &ThetaVector, k: u32, p: &MixedStrategy) -> Result<f64> {
    if p.len() != theta.len() {
        return Err(Error::InvalidArgument("strategy and theta differ in length".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("at least one user is required".into()));
    }
    // E[1 / (1 + X)] for X ~ Bin(k − 1, p_i).
    let share = |pi: f64| {
        if pi < 1e-12 {
            1.0
        } else {
            (1.0 - (1.0 - pi).powi(k as i32)) / (k as f64 * pi)
        }
    };
    let pure: Vec<f64> = theta
        .as_slice()
        .iter()
        .zip(p.probabilities())
        .map(|(&t, &pi)| t * share(pi))
        .collect();
    let common: f64 = pure.iter().zip(p.probabilities()).map(|(v, pi)| v * pi).sum();
    let best = pure.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((best - common).max(0.0))
}
