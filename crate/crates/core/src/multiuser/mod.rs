//! Several cognitive users sharing channels through random backoff.

mod adaptive;
mod contention;
mod kkt;
mod nash;
mod sim;

pub use adaptive::{
    rule2_probabilities, rule2_step, rule3_probabilities, rule3_step, rule3_switch_slot, AdaptiveUser, FixedMixed,
};
pub use contention::{backoff_winner, contention_resolve, ChannelContention, ContentionOutcome};
pub use kkt::{
    decay_constants, kkt_optimal_mixed, kkt_two_users_exact, mixed_deviation_gain, sample_index, symmetric_throughput, DecayConstants,
    KktSolution, MixedStrategy, Throughput,
};
pub use nash::{deviation_gain, nash_fractions, round_allocation, NashAllocation};
pub use sim::{run_multiuser_block, simulate_multiuser, MultiuserBlock, MultiuserReport, MultiuserSettings};

use serde::Serialize;

use crate::error::Result;
use crate::model::ThetaVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub users: u32,
    pub optimal: Vec<f64>,
    pub lambda: f64,
    pub nash: Vec<f64>,
    pub optimal_throughput: Throughput,
    pub nash_throughput: Throughput,
    pub decay: DecayConstants,
}

/// Optimal and proportional splits side by side.
pub fn equilibrium_report(theta: &ThetaVector, users: u32, horizon: f64, bandwidth: f64) -> Result<EquilibriumReport> {
    let kkt = kkt_optimal_mixed(theta, users)?;
    let nash = nash_fractions(theta)?;
    let tau = MixedStrategy::new(nash.tau.clone())?;
    Ok(EquilibriumReport {
        users,
        optimal_throughput: symmetric_throughput(theta, users, &kkt.p, horizon, bandwidth)?,
        nash_throughput: symmetric_throughput(theta, users, &tau, horizon, bandwidth)?,
        optimal: kkt.p.probabilities().to_vec(),
        lambda: kkt.lambda,
        nash: nash.tau,
        decay: decay_constants(theta)?,
    })
}
