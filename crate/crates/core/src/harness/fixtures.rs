//! Named experiment configs shipped with the library.

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

const SOURCES: &[(&str, &str)] = &[
    ("example1", include_str!("../../fixtures/example1.json")),
    ("dp-random-priors", include_str!("../../fixtures/dp-random-priors.json")),
    ("ucb-order", include_str!("../../fixtures/ucb-order.json")),
    ("twouser-closed-form", include_str!("../../fixtures/twouser-closed-form.json")),
    ("nash-decay", include_str!("../../fixtures/nash-decay.json")),
    ("nash-deviation", include_str!("../../fixtures/nash-deviation.json")),
    ("multiuser-sim", include_str!("../../fixtures/multiuser-sim.json")),
    ("multiuser-sim-3x5", include_str!("../../fixtures/multiuser-sim-3x5.json")),
    ("adaptive-rule2", include_str!("../../fixtures/adaptive-rule2.json")),
    ("adaptive-rule3", include_str!("../../fixtures/adaptive-rule3.json")),
    ("multi-channel-order", include_str!("../../fixtures/multi-channel-order.json")),
    ("sw-stationary", include_str!("../../fixtures/sw-stationary.json")),
];

pub fn fixture_names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _)| *n).collect()
}

pub fn fixture_source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn fixture(name: &str) -> Result<ExperimentConfig> {
    let text = fixture_source(name).ok_or_else(|| {
        Error::InvalidArgument(format!("unknown fixture `{name}`; available: {}", fixture_names().join(", ")))
    })?;
    ExperimentConfig::from_json(text)
}

pub fn bundled_fixtures() -> Vec<(&'static str, ExperimentConfig)> {
    SOURCES
        .iter()
        .map(|(n, s)| (*n, ExperimentConfig::from_json(s).expect("bundled fixture is valid")))
        .collect()
}
