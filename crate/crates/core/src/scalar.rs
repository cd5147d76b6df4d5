//! Arithmetic backends for priors and dynamic programming.
//!
//! Two implementations exist: `f64`, compared with a `1e-12` relative
//! tolerance, and [`Rational`] (arbitrary precision), compared exactly.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Relative tolerance used for float comparisons in argmax and normalization.
pub const FLOAT_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Converts a probability given as `f64`.
    ///
    /// The rational backend reads the shortest decimal expansion of the
    /// float, so `0.1` becomes exactly `1/10`.
    fn from_f64(v: f64) -> Result<Self>;

    fn from_u64(n: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// Equality used for argmax tie sets and normalization checks.
    fn tie_eq(&self, other: &Self) -> bool;

    fn is_exact() -> bool;

    /// `base^exp` with `0^0 = 1`.
    fn powu(&self, exp: u32) -> Self {
        num::pow::pow(self.clone(), exp as usize)
    }

    /// Multiplies `weights` by `likelihoods` and renormalizes.
    ///
    /// Returns `None` when every product is zero.
    fn reweight(weights: &[Self], likelihoods: &[Self]) -> Option<Vec<Self>> {
        let raw: Vec<Self> = weights
            .iter()
            .zip(likelihoods)
            .map(|(w, l)| w.clone() * l.clone())
            .collect();
        normalize(raw)
    }

    /// Posterior weights after observing `free[i]` free slots out of
    /// `sensed[i]` sensings per channel.
    fn posterior_weights(
        weights: &[Self],
        atoms: &[Vec<Self>],
        free: &[u32],
        sensed: &[u32],
    ) -> Option<Vec<Self>> {
        let lik: Vec<Self> = atoms
            .iter()
            .map(|atom| {
                atom.iter()
                    .zip(free.iter().zip(sensed))
                    .fold(Self::one(), |acc, (theta, (&x, &y))| {
                        let busy = Self::one() - theta.clone();
                        acc * theta.powu(x) * busy.powu(y - x)
                    })
            })
            .collect();
        Self::reweight(weights, &lik)
    }
}

fn normalize<S: Scalar>(raw: Vec<S>) -> Option<Vec<S>> {
    let total = raw.iter().cloned().fold(S::zero(), |a, b| a + b);
    if total.is_zero() {
        return None;
    }
    Some(raw.into_iter().map(|w| w / total.clone()).collect())
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Result<Self> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidArgument(format!("non-finite value {v}")))
        }
    }

    fn from_u64(n: u64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tie_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOL * self.abs().max(other.abs()).max(1.0)
    }

    fn is_exact() -> bool {
        false
    }

    fn powu(&self, exp: u32) -> Self {
        if exp == 0 {
            1.0
        } else {
            self.powi(exp as i32)
        }
    }

    fn reweight(weights: &[f64], likelihoods: &[f64]) -> Option<Vec<f64>> {
        let tiny = weights.iter().any(|&w| w > 0.0 && w < 1e-300)
            || likelihoods.iter().any(|&l| l > 0.0 && l < 1e-300);
        if !tiny {
            return normalize(weights.iter().zip(likelihoods).map(|(w, l)| w * l).collect());
        }
        let logs: Vec<f64> = weights
            .iter()
            .zip(likelihoods)
            .map(|(w, l)| w.ln() + l.ln())
            .collect();
        from_log_weights(&logs)
    }

    fn posterior_weights(
        weights: &[f64],
        atoms: &[Vec<f64>],
        free: &[u32],
        sensed: &[u32],
    ) -> Option<Vec<f64>> {
        // Long blocks underflow the direct product, so work with logs.
        let logs: Vec<f64> = weights
            .iter()
            .zip(atoms)
            .map(|(&w, atom)| {
                let mut lw = w.ln();
                for (&theta, (&x, &y)) in atom.iter().zip(free.iter().zip(sensed)) {
                    if x > 0 {
                        lw += x as f64 * theta.ln();
                    }
                    if y > x {
                        lw += (y - x) as f64 * (1.0 - theta).ln();
                    }
                }
                lw
            })
            .collect();
        from_log_weights(&logs)
    }
}

fn from_log_weights(logs: &[f64]) -> Option<Vec<f64>> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Some(exps.into_iter().map(|e| e / total).collect())
}

impl Scalar for Rational {
    fn from_f64(v: f64) -> Result<Self> {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cannot represent {v} as a nonnegative rational"
            )));
        }
        parse_decimal(&format!("{v}"))
    }

    fn from_u64(n: u64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tie_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn is_exact() -> bool {
        true
    }
}

/// Parses `"3/4"`, `"0.75"` or `"3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let num: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad numerator in `{text}`")))?;
        let den: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad denominator in `{text}`")))?;
        if den.is_zero() {
            return Err(Error::InvalidArgument(format!("zero denominator in `{text}`")));
        }
        return Ok(Rational::new(num, den));
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Result<Rational> {
    let bad = || Error::InvalidArgument(format!("not a decimal number: `{text}`"));
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num::pow::pow(BigInt::from(10), frac_part.len());
    let r = Rational::new(num, den);
    Ok(if negative { -r } else { r })
}

/// Formats a rational as `p/q`, or `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else if r.is_negative() {
        format!("-{}/{}", r.numer().abs(), r.denom())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn decimal_floats_become_exact_fractions() {
        assert_eq!(Rational::from_f64(0.1).unwrap(), q(1, 10));
        assert_eq!(Rational::from_f64(0.8).unwrap(), q(4, 5));
        assert_eq!(Rational::from_f64(1.0).unwrap(), q(1, 1));
        assert_eq!(Rational::from_f64(0.0).unwrap(), q(0, 1));
    }

    #[test]
    fn parse_fraction_strings() {
        assert_eq!(parse_rational("4/5").unwrap(), q(4, 5));
        assert_eq!(parse_rational(" 0.25 ").unwrap(), q(1, 4));
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn format_round_trips() {
        assert_eq!(format_rational(&q(252, 5)), "252/5");
        assert_eq!(format_rational(&q(48, 1)), "48");
        assert_eq!(parse_rational(&format_rational(&q(-7, 3))).unwrap(), q(-7, 3));
    }

    #[test]
    fn float_log_space_matches_direct_product() {
        let w = [0.3, 0.7];
        let atoms = vec![vec![0.2, 0.9], vec![0.6, 0.4]];
        let direct = <f64 as Scalar>::reweight(&w, &[0.2_f64.powi(3) * 0.8, 0.6_f64.powi(3) * 0.4]).unwrap();
        let logs = f64::posterior_weights(&w, &atoms, &[3, 0], &[4, 0]).unwrap();
        for (a, b) in direct.iter().zip(&logs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn float_posterior_survives_underflow() {
        let w = [0.5, 0.5];
        let atoms = vec![vec![0.2], vec![0.3]];
        // 0.2^5000 underflows; the log-space path keeps a finite answer.
        let post = f64::posterior_weights(&w, &atoms, &[5000], &[5000]).unwrap();
        assert!(post[1] > 0.999_999);
        assert!((post[0] + post[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_total_is_none() {
        assert!(<f64 as Scalar>::reweight(&[0.5, 0.5], &[0.0, 0.0]).is_none());
        assert!(Rational::reweight(&[q(1, 2), q(1, 2)], &[q(0, 1), q(0, 1)]).is_none());
    }
}
