//! Bayesian strategies over finite-mixture priors: the exact optimal value
//! by backward induction, the myopic rules, and calibration indices.

pub mod dp;
pub mod index;
pub mod myopic;

pub use dp::{
    bayes_myopic_value, optimal_value, static_myopic_value, DpOptions, OptimalAction, PolicyNode,
    StateEntry, StateKey, ValueTable, DEFAULT_STATE_CAP,
};
pub use index::{gittins_index, gittins_index_capped, stopping_index, GittinsIndex};
pub use myopic::{myopic_bayes_action, myopic_bayes_ties, symmetric_two_channel_action, SymmetricTwoChannel};
