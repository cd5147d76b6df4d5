use serde::{Deserialize, Serialize};

use crate::bayes::DEFAULT_STATE_CAP;
use crate::error::{Error, Result};
use crate::index::{ChannelSource, SwitchRule};
use crate::model::{DiscretePrior, ExactPrior, ThetaVector};
use crate::scalar::{parse_rational, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exact finite-horizon optimum for a prior.
    Dp,
    /// Single-user Monte-Carlo loss.
    Simulate,
    /// Several users under contention, simulated or in closed form.
    Multiuser,
    /// Grid over `t_grid` (and `k_grid`) with fitted growth rates.
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Dp => "dp",
            Mode::Simulate => "simulate",
            Mode::Multiuser => "multiuser",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    #[default]
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchRuleName {
    #[default]
    UniformOther,
    Cyclic,
    BestOther,
}

impl From<SwitchRuleName> for SwitchRule {
    fn from(r: SwitchRuleName) -> Self {
        match r {
            SwitchRuleName::UniformOther => SwitchRule::UniformOther,
            SwitchRuleName::Cyclic => SwitchRule::Cyclic,
            SwitchRuleName::BestOther => SwitchRule::BestOther,
        }
    }
}

/// A number written either as a JSON number or as text such as `"4/5"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Num::Float(v) => Rational::from_f64(*v),
            Num::Text(s) => parse_rational(s),
        }
    }

    pub fn to_f64(&self) -> Result<f64> {
        Ok(match self {
            Num::Float(v) => *v,
            Num::Text(_) => self.to_rational()?.to_f64(),
        })
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num::Float(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub atoms: Vec<Vec<Num>>,
    pub weights: Vec<Num>,
}

/// Random two-channel, two-atom priors with entries on a `1/denominator`
/// grid, for checking the exact optimum at scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSweep {
    pub count: usize,
    pub denominator: u32,
    /// Every `known_every`-th prior shares channel 2's availability
    /// across atoms; 0 disables this.
    #[serde(default)]
    pub known_every: usize,
}

fn default_horizon() -> u64 {
    1
}
fn default_one_u32() -> u32 {
    1
}
fn default_one_usize() -> usize {
    1
}
fn default_bandwidth() -> Num {
    Num::Float(100.0)
}
fn default_replications() -> usize {
    200
}
fn default_seed() -> u64 {
    1
}
fn default_state_cap() -> usize {
    DEFAULT_STATE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub id: String,
    pub mode: Mode,
    #[serde(default)]
    pub theta: Option<Vec<Num>>,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub prior_sweep: Option<PriorSweep>,
    /// Slots per block.
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub t_grid: Option<Vec<u64>>,
    #[serde(default = "default_one_u32")]
    pub users: u32,
    #[serde(default)]
    pub k_grid: Option<Vec<u32>>,
    #[serde(default = "default_one_usize")]
    pub sense_per_slot: usize,
    /// Bits per free slot.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: Num,
    #[serde(default)]
    pub strategies: Vec<String>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub arithmetic: Arithmetic,
    #[serde(default = "default_state_cap")]
    pub state_cap: usize,
    /// Multi-user closed forms only, no simulation.
    #[serde(default)]
    pub analytic: bool,
    #[serde(default)]
    pub switch_rule: SwitchRuleName,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub output: Option<String>,
}

pub const SINGLE_USER_STRATEGIES: &[&str] = &[
    "genie",
    "random",
    "myopic-freq",
    "myopic-bayes",
    "stay-with-winner",
    "optimistic-stay-with-winner",
    "ucb1",
    "ucb-multi",
    "dp-optimal",
];

pub const MULTIUSER_STRATEGIES: &[&str] = &["p-star", "nash", "rule2", "rule3", "genie", "random", "ucb1"];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn horizons(&self) -> Vec<u64> {
        self.t_grid.clone().unwrap_or_else(|| vec![self.horizon])
    }

    pub fn user_counts(&self) -> Vec<u32> {
        self.k_grid.clone().unwrap_or_else(|| vec![self.users])
    }

    pub fn bandwidth_f64(&self) -> Result<f64> {
        self.bandwidth.to_f64().map_err(|e| Error::config("bandwidth", e.to_string()))
    }

    /// Multi-user runs: explicit multi-user mode, or a sweep with users.
    pub fn is_multiuser(&self) -> bool {
        match self.mode {
            Mode::Multiuser => true,
            Mode::Sweep => self.k_grid.is_some() || self.users > 1,
            _ => false,
        }
    }

    pub fn num_channels(&self) -> usize {
        if let Some(t) = &self.theta {
            t.len()
        } else if let Some(p) = &self.prior {
            p.atoms.first().map_or(0, |a| a.len())
        } else {
            2
        }
    }

    pub fn theta_vector(&self) -> Result<Option<ThetaVector>> {
        let Some(t) = &self.theta else { return Ok(None) };
        let values = t
            .iter()
            .map(|v| v.to_f64())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::config("theta", e.to_string()))?;
        ThetaVector::new(values)
            .map(Some)
            .map_err(|e| Error::config("theta", e.to_string()))
    }

    /// The prior, or a point mass at `theta`.
    pub fn exact_prior(&self) -> Result<ExactPrior> {
        if let Some(p) = &self.prior {
            let conv = |v: &Num| v.to_rational().map_err(|e| Error::config("prior", e.to_string()));
            let atoms = p
                .atoms
                .iter()
                .map(|a| a.iter().map(conv).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let weights = p.weights.iter().map(conv).collect::<Result<Vec<_>>>()?;
            return DiscretePrior::new(atoms, weights).map_err(|e| Error::config("prior", e.to_string()));
        }
        if let Some(t) = &self.theta {
            let atom = t
                .iter()
                .map(|v| v.to_rational())
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::config("theta", e.to_string()))?;
            return DiscretePrior::point_mass(atom).map_err(|e| Error::config("theta", e.to_string()));
        }
        Err(Error::config("prior", "no prior or theta given"))
    }

    pub fn float_prior(&self) -> Result<DiscretePrior<f64>> {
        if let Some(p) = &self.prior {
            let conv = |v: &Num| v.to_f64().map_err(|e| Error::config("prior", e.to_string()));
            let atoms = p
                .atoms
                .iter()
                .map(|a| a.iter().map(conv).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let weights = p.weights.iter().map(conv).collect::<Result<Vec<_>>>()?;
            return DiscretePrior::new(atoms, weights).map_err(|e| Error::config("prior", e.to_string()));
        }
        match self.theta_vector()? {
            Some(t) => Ok(DiscretePrior::from(&t)),
            None => Err(Error::config("prior", "no prior or theta given")),
        }
    }

    pub fn source(&self) -> Result<ChannelSource> {
        if let Some(t) = self.theta_vector()? {
            return Ok(ChannelSource::Known(t));
        }
        Ok(ChannelSource::Prior(self.float_prior()?))
    }

    pub fn validate(&self) -> Result<()> {
        let given = [self.theta.is_some(), self.prior.is_some(), self.prior_sweep.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(Error::config("theta", "exactly one of theta, prior or prior_sweep must be set"));
        }
        if self.prior_sweep.is_some() && self.mode != Mode::Dp {
            return Err(Error::config("prior_sweep", "only available in dp mode"));
        }
        if let Some(s) = &self.prior_sweep {
            if s.count == 0 {
                return Err(Error::config("prior_sweep.count", "must be at least 1"));
            }
            if s.denominator < 2 {
                return Err(Error::config("prior_sweep.denominator", "must be at least 2"));
            }
        }
        if self.theta.is_some() {
            self.theta_vector()?;
        }
        if self.prior.is_some() {
            self.float_prior()?;
        }
        let n = self.num_channels();
        if n == 0 {
            return Err(Error::config("theta", "at least one channel is required"));
        }
        if self.sense_per_slot == 0 || self.sense_per_slot > n {
            return Err(Error::config(
                "sense_per_slot",
                format!("must be between 1 and the number of channels ({n})"),
            ));
        }
        if self.horizons().iter().any(|&t| t == 0) {
            return Err(Error::config(if self.t_grid.is_some() { "t_grid" } else { "horizon" }, "must be at least 1"));
        }
        if self.t_grid.as_ref().is_some_and(|g| g.is_empty()) {
            return Err(Error::config("t_grid", "must not be empty"));
        }
        if self.user_counts().iter().any(|&k| k == 0) {
            return Err(Error::config(if self.k_grid.is_some() { "k_grid" } else { "users" }, "must be at least 1"));
        }
        if self.k_grid.as_ref().is_some_and(|g| g.is_empty()) {
            return Err(Error::config("k_grid", "must not be empty"));
        }
        let b = self.bandwidth_f64()?;
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::config("bandwidth", "must be positive"));
        }
        if self.mode != Mode::Dp && !self.analytic && self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if self.mode == Mode::Dp {
            if self.horizons().iter().any(|&t| t > u32::MAX as u64) {
                return Err(Error::config("horizon", "too large for exact dynamic programming"));
            }
            return Ok(());
        }
        if self.strategies.is_empty() {
            return Err(Error::config("strategies", "at least one strategy is required"));
        }
        let allowed = if self.is_multiuser() {
            MULTIUSER_STRATEGIES
        } else {
            SINGLE_USER_STRATEGIES
        };
        for s in &self.strategies {
            if !allowed.contains(&s.as_str()) {
                return Err(Error::config(
                    "strategies",
                    format!("unknown strategy `{s}`; expected one of {}", allowed.join(", ")),
                ));
            }
        }
        if self.is_multiuser() {
            if self.sense_per_slot != 1 {
                return Err(Error::config("sense_per_slot", "multi-user runs sense one channel per user"));
            }
            if self.analytic && self.theta.is_none() {
                return Err(Error::config("theta", "closed forms need a known theta"));
            }
            if self.analytic && self.strategies.iter().any(|s| s != "p-star" && s != "nash") {
                return Err(Error::config("strategies", "closed forms exist for p-star and nash only"));
            }
        } else {
            for s in &self.strategies {
                let needs_prior = s == "dp-optimal";
                if needs_prior && self.prior.is_none() {
                    return Err(Error::config("prior", format!("`{s}` needs a prior")));
                }
                if s == "optimistic-stay-with-winner" && (self.theta.is_none() || n < 2) {
                    return Err(Error::config("theta", format!("`{s}` needs a known theta with two or more channels")));
                }
                let single = matches!(s.as_str(), "ucb1" | "stay-with-winner" | "optimistic-stay-with-winner" | "dp-optimal");
                if single && self.sense_per_slot != 1 && s != "dp-optimal" {
                    return Err(Error::config("sense_per_slot", format!("`{s}` senses one channel per slot")));
                }
                if s == "dp-optimal" && self.horizons().iter().any(|&t| t > 64) {
                    return Err(Error::config("horizon", "dp-optimal is limited to 64 slots"));
                }
            }
        }
        Ok(())
    }
}
