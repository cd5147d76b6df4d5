use rand::Rng;

use crate::bayes::dp::argmax_ties;
use crate::error::{Error, Result};
use crate::model::{DiscretePrior, SensingOutcome};
use crate::scalar::Scalar;

/// Channels with the highest posterior availability.
pub fn myopic_bayes_ties<S: Scalar>(prior: &DiscretePrior<S>) -> Vec<usize> {
    argmax_ties(prior.availabilities().iter())
}

/// Bayesian myopic choice; ties broken uniformly with `rng`.
pub fn myopic_bayes_action<S: Scalar, R: Rng + ?Sized>(prior: &DiscretePrior<S>, rng: &mut R) -> usize {
    let ties = myopic_bayes_ties(prior);
    ties[rng.gen_range(0..ties.len())]
}

/// Decision rule for `ξ δ(θa, θb) + (1 − ξ) δ(θb, θa)`: sense channel 0 when
/// `ξ > 1/2`, channel 1 when `ξ < 1/2`, either with equal probability at `1/2`.
pub fn symmetric_two_channel_action<R: Rng + ?Sized>(xi: f64, rng: &mut R) -> usize {
    if xi > 0.5 {
        0
    } else if xi < 0.5 {
        1
    } else {
        rng.gen_range(0..2)
    }
}

/// Two channels known to carry the rates `θa > θb` in unknown order.
///
/// The posterior stays in the two-atom family, so the whole state is the
/// weight `ξ` on "channel 0 has rate `θa`".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricTwoChannel {
    pub theta_a: f64,
    pub theta_b: f64,
    pub xi: f64,
}

impl SymmetricTwoChannel {
    pub fn new(theta_a: f64, theta_b: f64, xi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta_b) || !(0.0..=1.0).contains(&theta_a) || theta_b >= theta_a {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= θb < θa <= 1, got θa={theta_a}, θb={theta_b}"
            )));
        }
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::InvalidArgument(format!("ξ={xi} not in [0, 1]")));
        }
        Ok(Self { theta_a, theta_b, xi })
    }

    pub fn prior(&self) -> DiscretePrior<f64> {
        DiscretePrior::new(
            vec![vec![self.theta_a, self.theta_b], vec![self.theta_b, self.theta_a]],
            vec![self.xi, 1.0 - self.xi],
        )
        .expect("valid two-atom prior")
    }

    pub fn action<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        symmetric_two_channel_action(self.xi, rng)
    }

    /// Bayes update of `ξ` after sensing.
    pub fn update(&mut self, outcome: SensingOutcome) -> Result<()> {
        let (first, second) = match outcome.channel {
            0 => (self.theta_a, self.theta_b),
            1 => (self.theta_b, self.theta_a),
            c => return Err(Error::ChannelOutOfRange { channel: c, channels: 2 }),
        };
        let (la, lb) = if outcome.free {
            (first, second)
        } else {
            (1.0 - first, 1.0 - second)
        };
        let num = self.xi * la;
        let den = num + (1.0 - self.xi) * lb;
        if den == 0.0 {
            return Err(Error::ZeroLikelihood);
        }
        self.xi = num / den;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    #[test]
    fn myopic_examples() {
        let mut rng = RngSeed::new(3, 0).rng();
        let ex1 = DiscretePrior::new(vec![vec![0.1, 0.0], vec![0.8, 1.0]], vec![0.8, 0.2]).unwrap();
        assert_eq!(myopic_bayes_ties(&ex1), vec![0]);
        assert_eq!(myopic_bayes_action(&ex1, &mut rng), 0);
        let pm = DiscretePrior::point_mass(vec![0.2, 0.9, 0.4]).unwrap();
        assert_eq!(myopic_bayes_action(&pm, &mut rng), 1);
        let sym = SymmetricTwoChannel::new(0.7, 0.2, 0.5).unwrap().prior();
        assert_eq!(myopic_bayes_ties(&sym), vec![0, 1]);
    }

    #[test]
    fn symmetric_rule() {
        let mut rng = RngSeed::new(4, 0).rng();
        assert_eq!(symmetric_two_channel_action(0.8, &mut rng), 0);
        assert_eq!(symmetric_two_channel_action(0.2, &mut rng), 1);
        let n = 100_000;
        let ones: usize = (0..n).map(|_| symmetric_two_channel_action(0.5, &mut rng)).sum();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn xi_update_matches_generic_posterior() {
        let mut s = SymmetricTwoChannel::new(0.9, 0.3, 0.4).unwrap();
        let mut prior = s.prior();
        for o in [(0, true), (1, false), (1, true), (0, false), (0, false)] {
            let o = SensingOutcome::new(o.0, o.1);
            s.update(o).unwrap();
            prior = prior.posterior_update(o).unwrap();
            assert!((prior.weights()[0] - s.xi).abs() < 1e-14);
            // Still of the symmetric form.
            assert_eq!(prior.atoms(), s.prior().atoms());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SymmetricTwoChannel::new(0.2, 0.7, 0.5).is_err());
        assert!(SymmetricTwoChannel::new(0.7, 0.2, 1.5).is_err());
        let mut s = SymmetricTwoChannel::new(1.0, 0.0, 1.0).unwrap();
        assert_eq!(s.update(SensingOutcome::new(0, false)), Err(Error::ZeroLikelihood));
    }
}
