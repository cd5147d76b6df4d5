//! Kullback-Leibler divergence and the asymptotic loss lower bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ThetaVector;

/// `D(p‖q)` between Bernoulli laws, in nats, with `0·ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("probabilities out of range: {p}, {q}")));
    }
    if p == q {
        return Ok(0.0);
    }
    if q == 0.0 || q == 1.0 {
        return Err(Error::DivergenceInfinite { p, q });
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    Ok((term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    /// Bits of loss per unit of `ln T`.
    pub constant: f64,
    /// No unique best channel; the constant is reported as zero.
    pub degenerate: bool,
    /// Channels whose divergence to the best one is infinite and were
    /// counted as contributing nothing.
    pub infinite_terms: Vec<usize>,
}

/// `B Σ_{i≠i*} (θ* − θ_i) / D(θ_i‖θ*)`.
pub fn lower_bound_constant(theta: &ThetaVector, bandwidth: f64) -> LowerBound {
    let best = theta.max();
    let winners = theta.as_slice().iter().filter(|&&t| t == best).count();
    if winners > 1 {
        return LowerBound {
            constant: 0.0,
            degenerate: true,
            infinite_terms: Vec::new(),
        };
    }
    let mut constant = 0.0;
    let mut infinite_terms = Vec::new();
    for (i, &t) in theta.as_slice().iter().enumerate() {
        if t == best {
            continue;
        }
        match kl_bernoulli(t, best) {
            Ok(d) => constant += (best - t) / d,
            Err(_) => infinite_terms.push(i),
        }
    }
    LowerBound {
        constant: bandwidth * constant,
        degenerate: false,
        infinite_terms,
    }
}
