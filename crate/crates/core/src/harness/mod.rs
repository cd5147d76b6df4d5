//! Experiment configs, seeded runs and result files.

mod config;
mod fixtures;
mod output;
mod run;

pub use config::{
    Arithmetic, ExperimentConfig, Mode, Num, PriorSpec, PriorSweep, SwitchRuleName, MULTIUSER_STRATEGIES,
    SINGLE_USER_STRATEGIES,
};
pub use fixtures::{bundled_fixtures, fixture, fixture_names, fixture_source};
pub use output::{emit_results, format_list, parse_list, parse_results, render, round12, Format, ResultRow};
pub use run::{
    max_nash_deviation_gain, run_experiment, second_channel_absorbing, sweep_priors, ExperimentOutput, StrategyTrace,
};
