//! Calibration indices for one unknown channel against a known one.
//!
//! Both indices maximize a ratio of expectations over stopping rules on the
//! unknown channel's count tree: the finite-horizon stopping index uses
//! undiscounted sums, the Gittins index geometric discounting. Only
//! deterministic stopping rules are enumerated.

use crate::error::{Error, Result};
use crate::model::{DiscretePrior, ObservationCounts};
use crate::scalar::Scalar;

fn check_marginal<S: Scalar>(prior: &DiscretePrior<S>) -> Result<()> {
    if prior.num_channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "index needs a single-channel prior, got {} channels",
            prior.num_channels()
        )));
    }
    Ok(())
}

/// Posterior availability at every count state `(x, y)` with `y < depth`.
/// Unreachable states carry `None`.
fn availability_tree<S: Scalar>(prior: &DiscretePrior<S>, depth: u32) -> Vec<Vec<Option<S>>> {
    (0..depth)
        .map(|y| {
            (0..=y)
                .map(|x| {
                    let counts = ObservationCounts::from_pairs(&[(x, y)]).expect("x <= y");
                    prior
                        .posterior_from_counts(&counts)
                        .ok()
                        .map(|p| p.expected_availability(0).expect("channel 0"))
                })
                .collect()
        })
        .collect()
}

fn check_cap(depth: u32, cap: usize) -> Result<()> {
    let states = depth as u128 * (depth as u128 + 1) / 2;
    if states > cap as u128 {
        return Err(Error::StateSpaceExceeded { cap });
    }
    Ok(())
}

/// Best stopping rule for the Lagrangian `E[Σ (Z_j - λ) γ^j]`, forced to
/// sense at least once. Returns `(lagrangian, numerator, denominator)` of
/// the maximizing rule at the root.
fn best_rule<S: Scalar>(tree: &[Vec<Option<S>>], lambda: &S, discount: &S) -> (S, S, S) {
    let depth = tree.len();
    // Value, reward numerator and slot denominator at the next layer.
    let mut g_next = vec![S::zero(); depth + 1];
    let mut n_next = vec![S::zero(); depth + 1];
    let mut d_next = vec![S::zero(); depth + 1];
    for y in (0..depth).rev() {
        let layer = &tree[y];
        let mut g = vec![S::zero(); y + 1];
        let mut num = vec![S::zero(); y + 1];
        let mut den = vec![S::zero(); y + 1];
        for x in 0..=y {
            let Some(p) = &layer[x] else { continue };
            let q = S::one() - p.clone();
            let cont_g = p.clone() - lambda.clone()
                + discount.clone() * (p.clone() * g_next[x + 1].clone() + q.clone() * g_next[x].clone());
            if y == 0 || cont_g > S::zero() {
                g[x] = cont_g;
                num[x] = p.clone()
                    + discount.clone() * (p.clone() * n_next[x + 1].clone() + q.clone() * n_next[x].clone());
                den[x] = S::one()
                    + discount.clone() * (p.clone() * d_next[x + 1].clone() + q * d_next[x].clone());
            }
        }
        g_next = g;
        n_next = num;
        d_next = den;
    }
    (g_next[0].clone(), n_next[0].clone(), d_next[0].clone())
}

/// Finite-horizon stopping index `Λ(f₁, T)`: the largest achievable ratio
/// `E[Σ_{j≤M} Z(j)] / E[M]` over stopping times `1 ≤ M ≤ T`.
///
/// Solved exactly by Dinkelbach iteration, which terminates after finitely
/// many rule improvements.
pub fn stopping_index<S: Scalar>(marginal: &DiscretePrior<S>, horizon: u32, state_cap: usize) -> Result<S> {
    check_marginal(marginal)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("stopping index needs T >= 1".into()));
    }
    check_cap(horizon, state_cap)?;
    let tree = availability_tree(marginal, horizon);
    let mut lambda = tree[0][0].clone().expect("root reachable");
    let one = S::one();
    for _ in 0..10_000 {
        let (g, num, den) = best_rule(&tree, &lambda, &one);
        if g <= S::zero() || g.tie_eq(&S::zero()) {
            break;
        }
        let next = num / den;
        if next <= lambda {
            break;
        }
        lambda = next;
    }
    Ok(lambda)
}

/// Discounted calibration index with its truncation metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GittinsIndex {
    pub value: f64,
    /// Slots kept in the truncated count tree.
    pub horizon: u32,
    /// Bound on the truncation error, `eps / (1 - α)`.
    pub error_bound: f64,
}

/// Gittins index of one channel under discount `alpha`.
///
/// The count tree is truncated at the first `H` with `α^H < truncation_eps`
/// and the calibrating known-channel rate is found by bisection.
pub fn gittins_index(marginal: &DiscretePrior<f64>, alpha: f64, truncation_eps: f64) -> Result<GittinsIndex> {
    gittins_index_capped(marginal, alpha, truncation_eps, crate::bayes::DEFAULT_STATE_CAP)
}

pub fn gittins_index_capped(
    marginal: &DiscretePrior<f64>,
    alpha: f64,
    truncation_eps: f64,
    state_cap: usize,
) -> Result<GittinsIndex> {
    check_marginal(marginal)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("discount {alpha} not in (0, 1)")));
    }
    if !(truncation_eps > 0.0 && truncation_eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation eps {truncation_eps} not in (0, 1)"
        )));
    }
    let horizon = (truncation_eps.ln() / alpha.ln()).floor() as u32 + 1;
    check_cap(horizon, state_cap)?;
    let tree = availability_tree(marginal, horizon);
    let atoms = marginal.atoms();
    let mut lo = atoms.iter().map(|a| a[0]).fold(f64::INFINITY, f64::min);
    let mut hi = atoms.iter().map(|a| a[0]).fold(f64::NEG_INFINITY, f64::max);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let (g, _, _) = best_rule(&tree, &mid, &alpha);
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GittinsIndex {
        value: 0.5 * (lo + hi),
        horizon,
        error_bound: truncation_eps / (1.0 - alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn point_mass_stopping_index() {
        let p = DiscretePrior::point_mass(vec![q(3, 5)]).unwrap();
        for t in 1..6 {
            assert_eq!(stopping_index(&p, t, 1000).unwrap(), q(3, 5));
        }
    }

    #[test]
    fn one_slot_index_is_mean() {
        let p = DiscretePrior::new(vec![vec![q(1, 5)], vec![q(4, 5)]], vec![q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(stopping_index(&p, 1, 1000).unwrap(), q(1, 2));
    }

    /// 0.5δ(0) + 0.5δ(1), T = 2. Rules: stop after one slot (ratio 1/2) or
    /// continue only after a free slot: (1/2 + 1/2) / (1 + 1/2) = 2/3; or
    /// always continue: 1/2. Brute force gives 2/3.
    #[test]
    fn deterministic_two_atom_index() {
        let p = DiscretePrior::new(vec![vec![q(0, 1)], vec![q(1, 1)]], vec![q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(stopping_index(&p, 2, 1000).unwrap(), q(2, 3));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p2 = DiscretePrior::point_mass(vec![0.5, 0.5]).unwrap();
        assert!(stopping_index(&p2, 2, 1000).is_err());
        let p = DiscretePrior::point_mass(vec![0.5]).unwrap();
        assert!(stopping_index(&p, 0, 1000).is_err());
        assert_eq!(stopping_index(&p, 100, 10).unwrap_err(), Error::StateSpaceExceeded { cap: 10 });
        assert!(gittins_index(&p, 1.0, 1e-6).is_err());
        assert!(gittins_index(&p, 0.5, 0.0).is_err());
    }

    #[test]
    fn gittins_point_mass() {
        for alpha in [0.5, 0.9, 0.99] {
            let p = DiscretePrior::point_mass(vec![0.37]).unwrap();
            let g = gittins_index(&p, alpha, 1e-8).unwrap();
            assert!((g.value - 0.37).abs() < 1e-9, "{alpha}: {}", g.value);
        }
    }

    #[test]
    fn gittins_exceeds_mean_under_uncertainty() {
        let p = DiscretePrior::new(vec![vec![0.2], vec![0.8]], vec![0.5, 0.5]).unwrap();
        let g = gittins_index(&p, 0.9, 1e-8).unwrap();
        assert!(g.value > 0.5 && g.value < 0.8);
        assert!(g.error_bound < 1e-6);
    }
}
