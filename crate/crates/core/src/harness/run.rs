use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::bayes::{bayes_myopic_value, optimal_value, static_myopic_value, DpOptions, PolicyNode, ValueTable};
use crate::error::{Error, Result};
use crate::harness::config::{Arithmetic, ExperimentConfig, Mode, Num};
use crate::harness::output::{format_list, ResultRow};
use crate::index::{
    lower_bound_constant, measure_loss, run_block, ChannelSource, DpOptimal, Genie, LossSettings, MyopicBayes,
    MyopicFreq, OptimisticStayWithWinner, RandomChoice, SlotRecord, StayWithWinner, Strategy, SwitchRule, Ucb,
};
use crate::model::{DiscretePrior, ExactPrior, ObservationCounts, SensingOutcome, ThetaVector};
use crate::multiuser::{
    decay_constants, deviation_gain, kkt_optimal_mixed, mixed_deviation_gain, nash_fractions, round_allocation, simulate_multiuser,
    symmetric_throughput, AdaptiveUser, FixedMixed, MixedStrategy, MultiuserSettings,
};
use crate::rng::{RngSeed, ROLE_THETA, ROLE_TRAFFIC, ROLE_USER_BASE};
use crate::scalar::{format_rational, Scalar};
use crate::stats;

/// Per-slot record of replication 0 for one strategy and horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyTrace {
    pub strategy: String,
    pub horizon: u64,
    pub slots: Vec<SlotRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<StrategyTrace>,
    /// Optimal policy tree of the last dp horizon (not for prior sweeps).
    pub policy: Option<PolicyNode>,
}

/// Runs a validated config. Output depends only on the config and its seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut out = ExperimentOutput::default();
    match cfg.mode {
        Mode::Dp if cfg.prior_sweep.is_some() => out.rows = run_prior_sweep(cfg)?,
        Mode::Dp => run_dp(cfg, &mut out)?,
        _ if cfg.is_multiuser() => out.rows = run_multiuser(cfg)?,
        _ => run_single_user(cfg, &mut out)?,
    }
    out.rows = out.rows.into_iter().map(ResultRow::normalized).collect();
    Ok(out)
}

fn num_text(v: &Num) -> String {
    match v {
        Num::Float(f) => f.to_string(),
        Num::Text(s) => s.clone(),
    }
}

fn describe_input(cfg: &ExperimentConfig) -> Option<String> {
    if let Some(t) = &cfg.theta {
        return Some(format!("theta={}", t.iter().map(num_text).collect::<Vec<_>>().join(";")));
    }
    cfg.prior.as_ref().map(|p| {
        let atoms = p
            .atoms
            .iter()
            .zip(&p.weights)
            .map(|(a, w)| format!("{}@{}", a.iter().map(num_text).collect::<Vec<_>>().join(","), num_text(w)))
            .collect::<Vec<_>>();
        format!("prior={}", atoms.join("|"))
    })
}

fn describe_exact(prior: &ExactPrior) -> String {
    let atoms = prior
        .atoms()
        .iter()
        .zip(prior.weights())
        .map(|(a, w)| {
            format!(
                "{}@{}",
                a.iter().map(format_rational).collect::<Vec<_>>().join(","),
                format_rational(w)
            )
        })
        .collect::<Vec<_>>();
    format!("prior={}", atoms.join("|"))
}

fn base_row(cfg: &ExperimentConfig, strategy: &str) -> Result<ResultRow> {
    Ok(ResultRow {
        experiment: cfg.id.clone(),
        mode: cfg.mode.as_str().to_string(),
        strategy: strategy.to_string(),
        kind: "point".into(),
        input: describe_input(cfg),
        channels: cfg.num_channels(),
        users: cfg.users,
        sense_per_slot: cfg.sense_per_slot,
        bandwidth_bits: cfg.bandwidth_f64()?,
        seed: Some(cfg.seed),
        ..Default::default()
    })
}

fn action_text(ties: &[Vec<usize>]) -> String {
    ties.iter()
        .map(|t| t.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join("+"))
        .collect::<Vec<_>>()
        .join("|")
}

/// Fills the exact-optimum columns shared by dp rows.
fn dp_columns<S: Scalar>(
    row: &mut ResultRow,
    prior: &DiscretePrior<S>,
    bandwidth: S,
    horizon: u32,
    options: DpOptions,
) -> Result<(ValueTable<S>, S)> {
    let table = optimal_value(prior, horizon, bandwidth.clone(), options)?;
    let value = table.value();
    row.value_bits = Some(value.to_f64());
    row.myopic_value_bits =
        Some(static_myopic_value(prior, horizon, bandwidth.clone(), options.sense_per_slot).to_f64());
    if options.sense_per_slot == 1 {
        row.bayes_myopic_value_bits = Some(bayes_myopic_value(prior, horizon, bandwidth)?.to_f64());
    }
    let root = ObservationCounts::new(prior.num_channels());
    if horizon >= 1 {
        let action = table.optimal_action(&root, horizon)?;
        row.first_action = Some(action_text(&action.ties));
        if options.sense_per_slot == 1 && horizon >= 2 {
            let c = action.channels[0];
            let next = |free: bool| {
                table
                    .optimal_action(&root.with(SensingOutcome::new(c, free)), horizon - 1)
                    .ok()
                    .map(|a| action_text(&a.ties))
            };
            row.after_free = next(true);
            row.after_busy = next(false);
        }
    }
    Ok((table, value))
}

/// With channel 2's availability known, sensing channel 2 is never
/// followed by a switch back.
pub fn second_channel_absorbing<S: Scalar>(table: &ValueTable<S>) -> bool {
    for (key, entry) in table.states() {
        if key.remaining < 2 || !entry.best.iter().any(|&b| entry.actions[b].channels == [1]) {
            continue;
        }
        let Ok(branches) = table.transitions(&key.counts, &[1]) else { return false };
        for (outcomes, _) in branches {
            let next = key.counts.with(outcomes[0]);
            match table.optimal_action(&next, key.remaining - 1) {
                Ok(a) if a.ties.contains(&vec![1]) => {}
                _ => return false,
            }
        }
    }
    true
}

fn known_second_channel<S: Scalar>(prior: &DiscretePrior<S>) -> bool {
    prior.num_channels() == 2 && prior.atoms().windows(2).all(|w| w[0][1] == w[1][1])
}

fn dp_options(cfg: &ExperimentConfig) -> DpOptions {
    DpOptions {
        sense_per_slot: cfg.sense_per_slot,
        state_cap: cfg.state_cap,
    }
}

fn run_dp(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<()> {
    for t in cfg.horizons() {
        let t = t as u32;
        let mut row = base_row(cfg, "dp-optimal")?;
        row.horizon_slots = Some(t as u64);
        let policy = match cfg.arithmetic {
            Arithmetic::Rational => {
                let prior = cfg.exact_prior()?;
                let b = cfg.bandwidth.to_rational().map_err(|e| Error::config("bandwidth", e.to_string()))?;
                let (table, value) = dp_columns(&mut row, &prior, b, t, dp_options(cfg))?;
                row.value_exact = Some(format_rational(&value));
                if known_second_channel(&prior) {
                    row.absorbing = Some(second_channel_absorbing(&table));
                }
                table.policy_tree(t)
            }
            Arithmetic::Float => {
                let prior = cfg.float_prior()?;
                let (table, _) = dp_columns(&mut row, &prior, cfg.bandwidth_f64()?, t, dp_options(cfg))?;
                if known_second_channel(&prior) {
                    row.absorbing = Some(second_channel_absorbing(&table));
                }
                table.policy_tree(t)
            }
        };
        out.policy = Some(policy);
        out.rows.push(row);
    }
    Ok(())
}

/// Draws the sweep's priors: two atoms over two channels, entries `k/den`.
pub fn sweep_priors(cfg: &ExperimentConfig) -> Result<Vec<ExactPrior>> {
    let sweep = cfg
        .prior_sweep
        .as_ref()
        .ok_or_else(|| Error::config("prior_sweep", "missing"))?;
    let den = sweep.denominator as i64;
    let mut rng = RngSeed::derive(cfg.seed, 0, ROLE_THETA).rng();
    let q = |n: i64| crate::scalar::Rational::new(n.into(), den.into());
    let mut priors = Vec::with_capacity(sweep.count);
    for i in 0..sweep.count {
        let mut theta = [[0i64; 2]; 2];
        for atom in &mut theta {
            for t in atom.iter_mut() {
                *t = rng.gen_range(0..=den);
            }
        }
        if sweep.known_every > 0 && i % sweep.known_every == 0 {
            theta[1][1] = theta[0][1];
        }
        let w0 = rng.gen_range(1..den);
        priors.push(DiscretePrior::new(
            theta.iter().map(|a| a.iter().map(|&t| q(t)).collect()).collect(),
            vec![q(w0), q(den - w0)],
        )?);
    }
    Ok(priors)
}

fn run_prior_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let b = cfg.bandwidth.to_rational().map_err(|e| Error::config("bandwidth", e.to_string()))?;
    for prior in sweep_priors(cfg)? {
        for t in cfg.horizons() {
            let t = t as u32;
            let mut row = base_row(cfg, "dp-optimal")?;
            row.input = Some(describe_exact(&prior));
            row.channels = 2;
            row.horizon_slots = Some(t as u64);
            let table = match cfg.arithmetic {
                Arithmetic::Rational => {
                    let (table, value) = dp_columns(&mut row, &prior, b.clone(), t, dp_options(cfg))?;
                    row.value_exact = Some(format_rational(&value));
                    second_channel_absorbing(&table)
                }
                Arithmetic::Float => {
                    let (table, _) = dp_columns(&mut row, &prior.to_f64(), b.to_f64(), t, dp_options(cfg))?;
                    second_channel_absorbing(&table)
                }
            };
            if known_second_channel(&prior) {
                row.absorbing = Some(table);
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

type Factory = Box<dyn Fn(&ThetaVector) -> Box<dyn Strategy> + Sync>;

fn single_user_factory(name: &str, cfg: &ExperimentConfig, horizon: u64) -> Result<Factory> {
    let m = cfg.sense_per_slot;
    let rule: SwitchRule = cfg.switch_rule.into();
    Ok(match name {
        "genie" => Box::new(move |t| Box::new(Genie::new(t, m))),
        "random" => Box::new(move |_| Box::new(RandomChoice::new(m))),
        "myopic-freq" => Box::new(move |_| Box::new(MyopicFreq::new(m))),
        "myopic-bayes" => {
            let prior = cfg.float_prior()?;
            Box::new(move |_| Box::new(MyopicBayes::new(prior.clone(), m)))
        }
        "stay-with-winner" => Box::new(move |_| Box::new(StayWithWinner::new(rule))),
        "optimistic-stay-with-winner" => Box::new(|t| {
            let r = t.ranked();
            Box::new(OptimisticStayWithWinner::new(r[0], r[1]))
        }),
        "ucb1" => Box::new(|_| Box::new(Ucb::new(1))),
        "ucb-multi" => Box::new(move |_| Box::new(Ucb::new(m))),
        "dp-optimal" => {
            let table = Arc::new(optimal_value(
                &cfg.float_prior()?,
                horizon as u32,
                cfg.bandwidth_f64()?,
                dp_options(cfg),
            )?);
            Box::new(move |_| Box::new(DpOptimal::new(Arc::clone(&table))))
        }
        other => return Err(Error::config("strategies", format!("unknown strategy `{other}`"))),
    })
}

fn suboptimal_channels(theta: &ThetaVector, m: usize) -> Vec<usize> {
    theta.ranked().into_iter().skip(m).collect()
}

fn run_single_user(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<()> {
    let source = cfg.source()?;
    let known = match &source {
        ChannelSource::Known(t) => Some(t.clone()),
        ChannelSource::Prior(_) => None,
    };
    let b = cfg.bandwidth_f64()?;
    let m = cfg.sense_per_slot;
    let horizons = cfg.horizons();
    for name in &cfg.strategies {
        let mut points = Vec::new();
        for &t in &horizons {
            let factory = single_user_factory(name, cfg, t)?;
            let rep = measure_loss(
                &factory,
                &source,
                LossSettings {
                    horizon: t,
                    bandwidth: b,
                    sense_per_slot: m,
                    replications: cfg.replications,
                    seed: cfg.seed,
                },
            )?;
            let mut row = base_row(cfg, name)?;
            row.horizon_slots = Some(t);
            row.replications = Some(cfg.replications);
            row.genie_value_bits = Some(rep.genie_value);
            row.mean_bits = Some(rep.mean_bits);
            row.ci95_bits = Some(rep.ci95_bits);
            row.mean_loss_bits = Some(rep.mean_loss);
            row.ci95_loss_bits = Some(rep.ci95);
            row.mean_pseudo_loss_bits = Some(rep.mean_pseudo_loss);
            row.ci95_pseudo_loss_bits = Some(rep.pseudo_ci95);
            if t > 1 {
                row.pseudo_loss_per_ln_t = Some(rep.mean_pseudo_loss / (t as f64).ln());
            }
            row.channel_frequencies = Some(format_list(&rep.channel_frequencies));
            row.mean_sense_counts = Some(format_list(&rep.mean_sense_counts));
            if let Some(theta) = &known {
                if m == 1 {
                    row.lower_bound_constant_bits = Some(lower_bound_constant(theta, b).constant);
                }
                row.closed_form = match name.as_str() {
                    "genie" => Some(0.0),
                    "random" => {
                        let mean: f64 = theta.as_slice().iter().sum::<f64>() / theta.len() as f64;
                        Some(b * t as f64 * (theta.top_sum(m) - m as f64 * mean))
                    }
                    "optimistic-stay-with-winner" => {
                        let r = theta.ranked();
                        Some(OptimisticStayWithWinner::stationary_second(theta.get(r[0]), theta.get(r[1])))
                    }
                    _ => None,
                };
            }
            if cfg.trace {
                let theta = source.theta_for(cfg.seed, 0);
                let mut traffic = RngSeed::derive(cfg.seed, 0, ROLE_TRAFFIC).rng();
                let mut decisions = RngSeed::derive(cfg.seed, 0, ROLE_USER_BASE).rng();
                let mut s = factory(&theta);
                let block = run_block(s.as_mut(), &theta, t, b, &mut traffic, &mut decisions, true);
                out.traces.push(StrategyTrace {
                    strategy: name.clone(),
                    horizon: t,
                    slots: block.trace.unwrap_or_default(),
                });
            }
            points.push((t, rep));
            out.rows.push(row);
        }
        if points.len() >= 2 {
            out.rows.push(fit_row(cfg, name, &points, known.as_ref())?);
        }
    }
    Ok(())
}

fn positive_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    y.iter().all(|v| *v > 0.0).then(|| stats::power_law_exponent(x, y))
}

fn fit_row(
    cfg: &ExperimentConfig,
    name: &str,
    points: &[(u64, crate::index::LossReport)],
    known: Option<&ThetaVector>,
) -> Result<ResultRow> {
    let ts: Vec<f64> = points.iter().map(|(t, _)| *t as f64).collect();
    let loss: Vec<f64> = points.iter().map(|(_, r)| r.mean_pseudo_loss).collect();
    let mut row = base_row(cfg, name)?;
    row.kind = "fit".into();
    row.replications = Some(cfg.replications);
    row.fitted_exponent = positive_exponent(&ts, &loss);
    if ts.iter().all(|&t| t > 1.0) {
        let per_ln: Vec<f64> = ts.iter().zip(&loss).map(|(t, l)| l / t.ln()).collect();
        let max = per_ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = per_ln.iter().copied().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            row.loss_per_ln_t_ratio = Some(max / min);
        }
    }
    if let Some(theta) = known {
        let sub = suboptimal_channels(theta, cfg.sense_per_slot);
        let counts: Vec<f64> = points
            .iter()
            .map(|(_, r)| sub.iter().map(|&c| r.mean_sense_counts[c]).sum())
            .collect();
        row.suboptimal_sense_exponent = positive_exponent(&ts, &counts);
        if cfg.sense_per_slot == 1 {
            row.lower_bound_constant_bits = Some(lower_bound_constant(theta, cfg.bandwidth_f64()?).constant);
        }
    }
    Ok(row)
}

type UserFactory = Box<dyn Fn(usize, &ThetaVector) -> Box<dyn Strategy> + Sync>;

fn multiuser_factory(name: &str, users: u32) -> Result<UserFactory> {
    Ok(match name {
        "p-star" => Box::new(move |_, t| {
            let p = kkt_optimal_mixed(t, users).expect("some channel has positive availability").p;
            Box::new(FixedMixed::new(p, "p-star"))
        }),
        "nash" => Box::new(|_, t| {
            let tau = nash_fractions(t).expect("some channel has positive availability").tau;
            Box::new(FixedMixed::new(MixedStrategy::new(tau).expect("fractions sum to one"), "nash"))
        }),
        "rule2" => Box::new(|k, _| Box::new(AdaptiveUser::rule2(k))),
        "rule3" => Box::new(move |k, _| Box::new(AdaptiveUser::rule3(k, users))),
        "genie" => Box::new(|_, t| Box::new(Genie::new(t, 1))),
        "random" => Box::new(|_, _| Box::new(RandomChoice::new(1))),
        "ucb1" => Box::new(|_, _| Box::new(Ucb::new(1))),
        other => return Err(Error::config("strategies", format!("unknown strategy `{other}`"))),
    })
}

/// Selection law each strategy is meant to reach, where one is defined.
fn target_law(name: &str, theta: &ThetaVector, users: u32) -> Result<Option<Vec<f64>>> {
    Ok(match name {
        "p-star" | "rule3" => Some(kkt_optimal_mixed(theta, users)?.p.probabilities().to_vec()),
        "nash" | "rule2" => Some(nash_fractions(theta)?.tau),
        _ => None,
    })
}

/// Largest change in a user's win probability from moving alone, at the
/// rounded proportional allocation of `users` users.
pub fn max_nash_deviation_gain(theta: &ThetaVector, users: u32) -> Result<f64> {
    let tau = nash_fractions(theta)?.tau;
    let alloc = round_allocation(&tau, users);
    let mut worst = f64::NEG_INFINITY;
    for from in 0..theta.len() {
        if alloc[from] == 0 {
            continue;
        }
        for to in 0..theta.len() {
            if to != from {
                let (before, after) = deviation_gain(theta, &alloc, from, to)?;
                worst = worst.max(after - before);
            }
        }
    }
    Ok(worst)
}

fn run_multiuser(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if cfg.analytic {
        return run_multiuser_analytic(cfg);
    }
    let source = cfg.source()?;
    let known = cfg.theta_vector()?;
    let b = cfg.bandwidth_f64()?;
    let mut rows = Vec::new();
    for name in &cfg.strategies {
        for k in cfg.user_counts() {
            let factory = multiuser_factory(name, k)?;
            for t in cfg.horizons() {
                let rep = simulate_multiuser(
                    &factory,
                    &source,
                    MultiuserSettings {
                        users: k as usize,
                        horizon: t,
                        bandwidth: b,
                        replications: cfg.replications,
                        seed: cfg.seed,
                    },
                )?;
                let mut row = base_row(cfg, name)?;
                row.users = k;
                row.horizon_slots = Some(t);
                row.replications = Some(cfg.replications);
                row.mean_bits = Some(rep.mean_per_user);
                row.ci95_bits = Some(rep.ci95_per_user);
                row.genie_value_bits = Some(rep.mean_centralized);
                row.mean_loss_bits = Some(rep.mean_loss_vs_centralized);
                row.channel_frequencies = Some(format_list(&rep.channel_frequencies));
                if let Some(theta) = &known {
                    let law = target_law(name, theta, k)?;
                    if let (Some(p), "p-star" | "nash") = (&law, name.as_str()) {
                        let w = symmetric_throughput(theta, k, &MixedStrategy::new(p.clone())?, t as f64, b)?;
                        row.closed_form = Some(w.per_user_w);
                    }
                    row.probabilities = law.map(|p| format_list(&p));
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn run_multiuser_analytic(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let theta = cfg
        .theta_vector()?
        .ok_or_else(|| Error::config("theta", "closed forms need a known theta"))?;
    let b = cfg.bandwidth_f64()?;
    let t = cfg.horizon as f64;
    let decay = decay_constants(&theta)?;
    let mut rows = Vec::new();
    for name in &cfg.strategies {
        let mut curve = Vec::new();
        for k in cfg.user_counts() {
            let mut row = base_row(cfg, name)?;
            row.users = k;
            row.horizon_slots = Some(cfg.horizon);
            row.c1 = Some(decay.c1);
            row.c2 = Some(decay.c2);
            let p = if name == "p-star" {
                let sol = kkt_optimal_mixed(&theta, k)?;
                row.lambda = Some(sol.lambda);
                row.max_deviation_gain = Some(mixed_deviation_gain(&theta, k, &sol.p)?);
                sol.p
            } else {
                let nash = nash_fractions(&theta)?;
                row.closed_form = Some(b * t * nash.win_probability(k));
                row.max_deviation_gain = Some(max_nash_deviation_gain(&theta, k)?);
                MixedStrategy::new(nash.tau)?
            };
            let w = symmetric_throughput(&theta, k, &p, t, b)?;
            row.value_bits = Some(w.per_user_w);
            row.per_user_loss_bits = Some(w.per_user_loss);
            row.total_loss_bits = Some(w.total_loss);
            row.probabilities = Some(format_list(p.probabilities()));
            curve.push((k as f64, w.total_loss));
            rows.push(row);
        }
        if curve.len() >= 2 && curve.iter().all(|(_, l)| *l > 0.0) {
            let ks: Vec<f64> = curve.iter().map(|c| c.0).collect();
            let ln_l: Vec<f64> = curve.iter().map(|c| c.1.ln()).collect();
            let mut row = base_row(cfg, name)?;
            row.kind = "fit".into();
            row.horizon_slots = Some(cfg.horizon);
            row.c1 = Some(decay.c1);
            row.c2 = Some(decay.c2);
            row.fitted_slope = Some(stats::slope(&ks, &ln_l));
            rows.push(row);
        }
    }
    Ok(rows)
}
