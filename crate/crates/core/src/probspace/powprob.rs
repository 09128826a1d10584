use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One, Signed, Zero};
use thiserror::Error;

use super::mass::{root_interval, Comparison, Mass};
use super::prob::{format_rational, rational_to_f64, Prob};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PowProbError {
    #[error("exponent {0} is not positive")]
    NonPositiveExponent(String),
}

/// `∏ base_j^{exp_j}` with probability bases and positive rational
/// exponents; equal bases are merged.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PowProb {
    factors: Vec<(Prob, BigRational)>,
}

impl PowProb {
    pub fn new(factors: impl IntoIterator<Item = (Prob, BigRational)>) -> Result<Self, PowProbError> {
        let mut merged: BTreeMap<Prob, BigRational> = BTreeMap::new();
        for (b, e) in factors {
            if !e.is_positive() {
                return Err(PowProbError::NonPositiveExponent(format_rational(&e)));
            }
            *merged.entry(b).or_insert_with(BigRational::zero) += e;
        }
        if merged.keys().any(Prob::is_zero) {
            return Ok(PowProb {
                factors: vec![(Prob::zero(), BigRational::one())],
            });
        }
        merged.retain(|b, _| !b.is_one());
        Ok(PowProb {
            factors: merged.into_iter().collect(),
        })
    }

    pub fn from_prob(p: Prob) -> Self {
        PowProb::new([(p, BigRational::one())]).expect("unit exponent")
    }

    /// `p^{1/n}`.
    pub fn root(p: Prob, n: u32) -> Self {
        assert!(n >= 1, "root index must be positive");
        PowProb::new([(p, BigRational::new(1.into(), n.into()))]).expect("positive exponent")
    }

    pub fn factors(&self) -> &[(Prob, BigRational)] {
        &self.factors
    }

    pub fn mul(&self, other: &PowProb) -> PowProb {
        PowProb::new(self.factors.iter().chain(other.factors.iter()).cloned()).expect("exponents stay positive")
    }

    pub fn powi(&self, k: u32) -> PowProb {
        if k == 0 {
            return PowProb::from_prob(Prob::one());
        }
        let k = BigRational::from_integer(k.into());
        PowProb::new(self.factors.iter().map(|(b, e)| (b.clone(), e * &k))).expect("positive")
    }

    /// The exact rational value when every merged exponent is integral.
    pub fn to_prob(&self) -> Option<Prob> {
        let mut acc = Prob::one();
        for (b, e) in &self.factors {
            if !e.is_integer() {
                return None;
            }
            let k: usize = e.to_integer().try_into().ok()?;
            acc = acc.mul(&b.pow(k));
        }
        Some(acc)
    }

    /// Canonical algebraic value (detects e.g. `(1/4)^{1/2} = 1/2`).
    pub fn to_mass(&self) -> Mass {
        Mass::from_powers(self.factors.iter().map(|(b, e)| (b.value(), e)))
    }

    pub fn interval(&self, bits: u32) -> (BigRational, BigRational) {
        self.factors.iter().fold(
            (BigRational::one(), BigRational::one()),
            |(lo, hi), (b, e)| {
                let (l, h) = root_interval(b.value(), e, bits);
                (lo * l, hi * h)
            },
        )
    }

    pub fn to_f64(&self) -> f64 {
        self.factors
            .iter()
            .map(|(b, e)| b.to_f64().powf(rational_to_f64(e)))
            .product()
    }

    /// Exact when reducible, otherwise by interval evaluation at `bits`.
    pub fn cmp_prob(&self, p: &Prob, bits: u32) -> Comparison {
        if let Some(q) = self.to_prob() {
            return q.cmp(p).into();
        }
        let (lo, hi) = self.interval(bits);
        if lo == hi {
            return lo.cmp(p.value()).into();
        }
        if hi < *p.value() {
            Comparison::Less
        } else if lo > *p.value() {
            Comparison::Greater
        } else {
            Comparison::Indeterminate
        }
    }
}

impl fmt::Display for PowProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1/1");
        }
        for (i, (b, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if e.is_one() {
                write!(f, "({b})")?;
            } else {
                write!(f, "({b})^({})", format_rational(e))?;
            }
        }
        Ok(())
    }
}

/// A fact's marginal probability: usually rational, occasionally a
/// fractional power (segmentation encoding).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Marginal {
    Exact(Prob),
    Power(PowProb),
}

impl Marginal {
    pub fn power(p: PowProb) -> Self {
        match p.to_prob() {
            Some(q) => Marginal::Exact(q),
            None => Marginal::Power(p),
        }
    }

    pub fn as_exact(&self) -> Option<&Prob> {
        match self {
            Marginal::Exact(p) => Some(p),
            Marginal::Power(_) => None,
        }
    }

    pub fn to_mass(&self) -> Mass {
        match self {
            Marginal::Exact(p) => p.into(),
            Marginal::Power(p) => p.to_mass(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Marginal::Exact(p) => p.to_f64(),
            Marginal::Power(p) => p.to_f64(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Marginal::Exact(p) if p.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Marginal::Exact(p) if p.is_one())
    }
}

impl From<Prob> for Marginal {
    fn from(p: Prob) -> Self {
        Marginal::Exact(p)
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Exact(p) => write!(f, "{p}"),
            Marginal::Power(p) => write!(f, "{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::prob::ratio;

    #[test]
    fn exponents_merge_and_reduce() {
        let r = PowProb::root(Prob::ratio(1, 5), 2);
        assert!(r.to_prob().is_none());
        assert_eq!(r.mul(&r).to_prob(), Some(Prob::ratio(1, 5)));
        assert_eq!(r.powi(2), PowProb::from_prob(Prob::ratio(1, 5)));
    }

    #[test]
    fn comparison_against_prob() {
        let r = PowProb::root(Prob::ratio(1, 4), 2);
        // Not reducible by merging, but the root is exact.
        assert_eq!(r.cmp_prob(&Prob::ratio(1, 2), 128), Comparison::Equal);
        assert_eq!(r.to_mass(), Mass::from(ratio(1, 2)));
        let s = PowProb::root(Prob::ratio(1, 5), 2);
        assert_eq!(s.cmp_prob(&Prob::ratio(1, 2), 128), Comparison::Less);
        assert_eq!(s.cmp_prob(&Prob::ratio(2, 5), 128), Comparison::Greater);
    }
}
