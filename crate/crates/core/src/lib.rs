//! Cognitive medium access modeled as a competitive multi-armed bandit.
//!
//! - [`model`]: channel availability, finite-mixture priors, Bayesian updates.
//! - [`bayes`]: exact finite-horizon dynamic programming, stopping and Gittins indices.
//! - [`index`]: non-parametric strategies (UCB rules, baselines) and loss accounting.
//! - [`multiuser`]: CSMA contention, optimal symmetric and Nash channel splits, adaptive rules.
//! - [`harness`]: experiment configs, seeded Monte-Carlo runs, CSV/JSON output.

pub mod bayes;
pub mod error;
pub mod harness;
pub mod index;
pub mod model;
pub mod multiuser;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use model::{DiscretePrior, ExactPrior, History, ObservationCounts, SensingOutcome, ThetaVector};
pub use rng::{RngSeed, SimRng};
pub use scalar::{Rational, Scalar};
