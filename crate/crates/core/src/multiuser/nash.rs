//! Proportional (Nash) channel allocation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ThetaVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashAllocation {
    /// `τ_i = θ_i / Σθ`.
    pub tau: Vec<f64>,
    /// `Σθ`, the expected number of free channels per slot.
    pub total_theta: f64,
}

impl NashAllocation {
    /// Per-slot transmission probability of each of `k` users.
    pub fn win_probability(&self, k: u32) -> f64 {
        self.total_theta / k as f64
    }
}

pub fn nash_fractions(theta: &ThetaVector) -> Result<NashAllocation> {
    let total: f64 = theta.as_slice().iter().sum();
    if total <= 0.0 {
        return Err(Error::AllChannelsBusy);
    }
    Ok(NashAllocation {
        tau: theta.as_slice().iter().map(|t| t / total).collect(),
        total_theta: total,
    })
}

/// Integer user counts closest to `τK`: floors, then the largest
/// remainders get the leftover users (lowest channel first on ties).
pub fn round_allocation(tau: &[f64], k: u32) -> Vec<u32> {
    let exact: Vec<f64> = tau.iter().map(|t| t * k as f64).collect();
    let mut counts: Vec<u32> = exact.iter().map(|v| v.floor() as u32).collect();
    let assigned: u32 = counts.iter().sum();
    let mut order: Vec<usize> = (0..tau.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(k.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Win probability of a user on channel `from` before and after moving
/// alone to channel `to`, given the other users stay put.
pub fn deviation_gain(theta: &ThetaVector, allocation: &[u32], from: usize, to: usize) -> Result<(f64, f64)> {
    let n = theta.len();
    if allocation.len() != n {
        return Err(Error::InvalidArgument("allocation length differs from theta".into()));
    }
    for c in [from, to] {
        if c >= n {
            return Err(Error::ChannelOutOfRange { channel: c, channels: n });
        }
    }
    if allocation[from] == 0 {
        return Err(Error::InvalidArgument(format!("no user assigned to channel {from}")));
    }
    let before = theta.get(from) / allocation[from] as f64;
    let after = if from == to {
        before
    } else {
        theta.get(to) / (allocation[to] + 1) as f64
    };
    Ok((before, after))
}
