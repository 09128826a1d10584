use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbError {
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(String),
    #[error("cannot parse rational `{0}`")]
    Parse(String),
}

/// Parses `a/b` or `a` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<BigRational, ProbError> {
    let bad = || ProbError::Parse(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Renders a rational as `a/b`, always with an explicit denominator.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: scale through bit lengths.
        let n = r.numer().abs();
        let d = r.denom().clone();
        let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
        let n = (&n >> shift).to_f64().unwrap_or(f64::INFINITY);
        let d = (&d >> shift).to_f64().unwrap_or(f64::INFINITY);
        let v = n / d;
        if r.is_negative() {
            -v
        } else {
            v
        }
    })
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// An exact probability in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(BigRational);

impl Prob {
    pub fn new(r: BigRational) -> Result<Self, ProbError> {
        if r.is_negative() || r > BigRational::one() {
            Err(ProbError::OutOfRange(format_rational(&r)))
        } else {
            Ok(Prob(r))
        }
    }

    /// `n/d`; panics when out of range — meant for literals.
    pub fn ratio(n: i64, d: i64) -> Self {
        Prob::new(ratio(n, d)).expect("probability literal in range")
    }

    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }

    pub fn complement(&self) -> Prob {
        Prob(BigRational::one() - &self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn mul(&self, other: &Prob) -> Prob {
        Prob(&self.0 * &other.0)
    }

    pub fn pow(&self, k: usize) -> Prob {
        Prob(num::pow(self.0.clone(), k))
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }
}

impl FromStr for Prob {
    type Err = ProbError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Prob::new(parse_rational(s)?)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl From<Prob> for BigRational {
    fn from(p: Prob) -> Self {
        p.0
    }
}
