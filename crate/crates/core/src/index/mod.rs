//! Non-parametric channel-selection strategies and loss accounting.

mod baselines;
mod bounds;
mod sim;
mod strategy;
mod ucb;

pub use baselines::{
    baseline_myopic_freq, baseline_random, baseline_stay_with_winner, MyopicFreq, OptimisticStayWithWinner,
    RandomChoice, StayWithWinner, SwitchRule,
};
pub use bounds::{kl_bernoulli, lower_bound_constant, LowerBound};
pub use sim::{measure_loss, run_block, BlockResult, ChannelSource, LossReport, LossSettings, SlotRecord};
pub use strategy::{top_m_random_ties, DpOptimal, Genie, MyopicBayes, Strategy};
pub use ucb::{rule1_choose, rule4_choose, ucb_index, Ucb};
