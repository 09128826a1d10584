//! Exact algebraic masses.
//!
//! A [`Mass`] is a finite ℚ-linear combination of radicals `∏ p^e` with `p`
//! prime and `e ∈ (0,1)` rational. Such radicals are linearly independent
//! over ℚ, so the representation is canonical and equality is structural.
//! This is what lets products of fractional-power marginals and their
//! complements cancel back to rationals exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num::{BigInt, BigRational, BigUint, Integer, One, Signed, ToPrimitive, Zero};

use super::prob::{format_rational, rational_to_f64, Prob};

/// Default number of fractional bits for interval evaluation.
pub const DEFAULT_PRECISION: u32 = 128;

/// Outcome of comparing two possibly irrational quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Comparison {
    Less,
    Equal,
    Greater,
    /// Intervals at the requested precision overlap.
    Indeterminate,
}

impl From<Ordering> for Comparison {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => Comparison::Less,
            Ordering::Equal => Comparison::Equal,
            Ordering::Greater => Comparison::Greater,
        }
    }
}

const TRIAL_LIMIT: u32 = 1 << 16;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_LIMIT as usize;
        let mut sieve = vec![true; n + 1];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i <= n {
            if sieve[i] {
                let mut j = i * i;
                while j <= n {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (0..=n).filter(|&i| sieve[i]).map(|i| i as u32).collect()
    })
}

/// Prime factorisation by trial division. A cofactor above `TRIAL_LIMIT²`
/// is kept as a single opaque base and reported via the flag.
fn factor(n: &BigUint) -> (BTreeMap<BigUint, u64>, bool) {
    let mut out = BTreeMap::new();
    let mut n = n.clone();
    if n.is_zero() {
        return (out, false);
    }
    for &p in small_primes() {
        let bp = BigUint::from(p);
        if &bp * &bp > n {
            break;
        }
        let mut e = 0u64;
        loop {
            let (q, r) = n.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            n = q;
            e += 1;
        }
        if e > 0 {
            out.insert(bp, e);
        }
    }
    let mut opaque = false;
    if !n.is_one() {
        let limit = BigUint::from(TRIAL_LIMIT) * BigUint::from(TRIAL_LIMIT);
        opaque = n > limit;
        *out.entry(n).or_insert(0) += 1;
    }
    (out, opaque)
}

fn pow_int(base: &BigUint, e: &BigInt) -> BigRational {
    let mag = e.abs().to_usize().expect("exponent fits in usize");
    let p = BigInt::from(num::pow(base.clone(), mag));
    if e.is_negative() {
        BigRational::new(BigInt::one(), p)
    } else {
        BigRational::from_integer(p)
    }
}

/// `∏ base^exp` with every exponent in `(0, 1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Radical(BTreeMap<BigUint, BigRational>);

impl Radical {
    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    /// Product, with integral parts split off as a rational factor.
    fn mul(&self, other: &Radical) -> (Radical, BigRational) {
        let mut map = self.0.clone();
        let mut coeff = BigRational::one();
        for (p, e) in &other.0 {
            let entry = map.entry(p.clone()).or_insert_with(BigRational::zero);
            *entry += e;
            if *entry >= BigRational::one() {
                *entry -= BigRational::one();
                coeff *= BigRational::from_integer(BigInt::from(p.clone()));
            }
            if entry.is_zero() {
                map.remove(p);
            }
        }
        (Radical(map), coeff)
    }

    /// Enclosing interval `[lo, hi]` at `bits` fractional bits.
    fn interval(&self, bits: u32) -> (BigRational, BigRational) {
        let mut lo = BigRational::one();
        let mut hi = BigRational::one();
        for (p, e) in &self.0 {
            let (l, h) = root_interval(&BigRational::from_integer(BigInt::from(p.clone())), e, bits);
            lo *= l;
            hi *= h;
        }
        (lo, hi)
    }

    fn to_f64(&self) -> f64 {
        self.0
            .iter()
            .map(|(p, e)| p.to_f64().unwrap_or(f64::INFINITY).powf(rational_to_f64(e)))
            .product()
    }
}

/// Interval for `x^e` with `x ≥ 0` rational and `e > 0` rational.
pub(crate) fn root_interval(x: &BigRational, e: &BigRational, bits: u32) -> (BigRational, BigRational) {
    if x.is_zero() {
        return (BigRational::zero(), BigRational::zero());
    }
    let a = e.numer().to_usize().expect("exponent numerator fits");
    let b = e.denom().to_u32().expect("exponent denominator fits");
    let xa = num::pow(x.clone(), a);
    let scale = BigUint::one() << (bits as usize * b as usize);
    let scaled = BigRational::from_integer(BigInt::from(scale)) * xa;
    let floor = scaled.floor().to_integer().to_biguint().expect("nonnegative");
    let exact_int = scaled.is_integer();
    let l = floor.nth_root(b);
    let exact = exact_int && num::pow(l.clone(), b as usize) == floor;
    let unit = BigRational::from_integer(BigInt::from(BigUint::one() << bits as usize));
    let lo = BigRational::from_integer(BigInt::from(l.clone())) / &unit;
    let hi = if exact {
        lo.clone()
    } else {
        BigRational::from_integer(BigInt::from(l + 1u32)) / &unit
    };
    (lo, hi)
}

/// An exact real number in `ℚ[radicals]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mass {
    Rational(BigRational),
    /// Has at least one non-unit radical term with nonzero coefficient.
    Algebraic(Algebraic),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Algebraic {
    terms: BTreeMap<Radical, BigRational>,
    /// Some base could not be fully factored; equality may then be missed.
    opaque: bool,
}

impl Mass {
    pub fn zero() -> Self {
        Mass::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Mass::Rational(BigRational::one())
    }

    /// `∏ base_j^{exp_j}` for nonnegative rational bases and positive rational
    /// exponents, brought into canonical radical form.
    pub fn from_powers<'a>(factors: impl IntoIterator<Item = (&'a BigRational, &'a BigRational)>) -> Mass {
        let mut exps: BTreeMap<BigUint, BigRational> = BTreeMap::new();
        let mut opaque = false;
        for (base, e) in factors {
            if base.is_zero() {
                return Mass::zero();
            }
            let (num, o1) = factor(&base.numer().to_biguint().expect("nonnegative base"));
            let (den, o2) = factor(&base.denom().to_biguint().expect("positive denominator"));
            opaque |= o1 | o2;
            for (p, m) in num {
                *exps.entry(p).or_insert_with(BigRational::zero) += e * BigRational::from_integer(BigInt::from(m));
            }
            for (p, m) in den {
                *exps.entry(p).or_insert_with(BigRational::zero) -= e * BigRational::from_integer(BigInt::from(m));
            }
        }
        let mut coeff = BigRational::one();
        let mut rad = BTreeMap::new();
        for (p, e) in exps {
            let fl = e.floor();
            coeff *= pow_int(&p, &fl.to_integer());
            let frac = e - fl;
            if !frac.is_zero() {
                rad.insert(p, frac);
            }
        }
        let mut terms = BTreeMap::new();
        terms.insert(Radical(rad), coeff);
        Mass::normalize(terms, opaque)
    }

    fn normalize(mut terms: BTreeMap<Radical, BigRational>, opaque: bool) -> Mass {
        terms.retain(|_, c| !c.is_zero());
        if terms.keys().all(Radical::is_unit) {
            Mass::Rational(terms.into_values().next().unwrap_or_else(BigRational::zero))
        } else {
            Mass::Algebraic(Algebraic { terms, opaque })
        }
    }

    fn terms(&self) -> (BTreeMap<Radical, BigRational>, bool) {
        match self {
            Mass::Rational(r) => {
                let mut t = BTreeMap::new();
                if !r.is_zero() {
                    t.insert(Radical::default(), r.clone());
                }
                (t, false)
            }
            Mass::Algebraic(a) => (a.terms.clone(), a.opaque),
        }
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, Mass::Algebraic(a) if a.opaque)
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Mass::Rational(r) => Some(r),
            Mass::Algebraic(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Mass::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Mass::Rational(r) if r.is_one())
    }

    pub fn add(&self, other: &Mass) -> Mass {
        if let (Mass::Rational(a), Mass::Rational(b)) = (self, other) {
            return Mass::Rational(a + b);
        }
        let (mut t, o1) = self.terms();
        let (u, o2) = other.terms();
        for (r, c) in u {
            *t.entry(r).or_insert_with(BigRational::zero) += c;
        }
        Mass::normalize(t, o1 | o2)
    }

    pub fn neg(&self) -> Mass {
        match self {
            Mass::Rational(r) => Mass::Rational(-r),
            Mass::Algebraic(a) => Mass::Algebraic(Algebraic {
                terms: a.terms.iter().map(|(r, c)| (r.clone(), -c)).collect(),
                opaque: a.opaque,
            }),
        }
    }

    pub fn sub(&self, other: &Mass) -> Mass {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Mass) -> Mass {
        if let (Mass::Rational(a), Mass::Rational(b)) = (self, other) {
            return Mass::Rational(a * b);
        }
        let (t, o1) = self.terms();
        let (u, o2) = other.terms();
        let mut out: BTreeMap<Radical, BigRational> = BTreeMap::new();
        for (r1, c1) in &t {
            for (r2, c2) in &u {
                let (r, k) = r1.mul(r2);
                *out.entry(r).or_insert_with(BigRational::zero) += c1 * c2 * k;
            }
        }
        Mass::normalize(out, o1 | o2)
    }

    pub fn mul_rational(&self, q: &BigRational) -> Mass {
        match self {
            Mass::Rational(r) => Mass::Rational(r * q),
            Mass::Algebraic(_) => {
                let (t, o) = self.terms();
                Mass::normalize(t.into_iter().map(|(r, c)| (r, c * q)).collect(), o)
            }
        }
    }

    /// Division by a nonzero rational.
    pub fn div_rational(&self, q: &BigRational) -> Mass {
        assert!(!q.is_zero(), "division by zero mass");
        self.mul_rational(&(BigRational::one() / q))
    }

    pub fn pow(&self, k: usize) -> Mass {
        let mut acc = Mass::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// `1 − self`.
    pub fn complement(&self) -> Mass {
        Mass::one().sub(self)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Mass::Rational(r) => rational_to_f64(r),
            Mass::Algebraic(a) => a.terms.iter().map(|(r, c)| rational_to_f64(c) * r.to_f64()).sum(),
        }
    }

    /// Enclosing interval at `bits` fractional bits.
    pub fn interval(&self, bits: u32) -> (BigRational, BigRational) {
        match self {
            Mass::Rational(r) => (r.clone(), r.clone()),
            Mass::Algebraic(a) => {
                let mut lo = BigRational::zero();
                let mut hi = BigRational::zero();
                for (r, c) in &a.terms {
                    let (l, h) = r.interval(bits);
                    if c.is_negative() {
                        lo += c * &h;
                        hi += c * &l;
                    } else {
                        lo += c * &l;
                        hi += c * &h;
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Sign of the value. For canonical (non-opaque) values a nonzero
    /// algebraic number is refined until its sign is certain.
    pub fn cmp_zero(&self, bits: u32) -> Comparison {
        match self {
            Mass::Rational(r) => r.cmp(&BigRational::zero()).into(),
            Mass::Algebraic(a) => {
                let mut b = bits;
                loop {
                    let (lo, hi) = self.interval(b);
                    if lo.is_positive() {
                        return Comparison::Greater;
                    }
                    if hi.is_negative() {
                        return Comparison::Less;
                    }
                    if a.opaque || b >= 8 * bits.max(64) {
                        return Comparison::Indeterminate;
                    }
                    b *= 2;
                }
            }
        }
    }

    pub fn compare(&self, other: &Mass, bits: u32) -> Comparison {
        if self == other && !self.is_opaque() {
            return Comparison::Equal;
        }
        self.sub(other).cmp_zero(bits)
    }
}

impl From<BigRational> for Mass {
    fn from(r: BigRational) -> Self {
        Mass::Rational(r)
    }
}

impl From<&Prob> for Mass {
    fn from(p: &Prob) -> Self {
        Mass::Rational(p.value().clone())
    }
}

impl From<Prob> for Mass {
    fn from(p: Prob) -> Self {
        Mass::Rational(p.into_inner())
    }
}

impl fmt::Display for Mass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mass::Rational(r) => f.write_str(&format_rational(r)),
            Mass::Algebraic(a) => {
                for (i, (r, c)) in a.terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{}", format_rational(c))?;
                    for (p, e) in &r.0 {
                        write!(f, "*{p}^({})", format_rational(e))?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::prob::ratio;

    #[test]
    fn roots_cancel() {
        let b = ratio(1, 5);
        let h = ratio(1, 2);
        let q = Mass::from_powers([(&b, &h)]);
        assert!(q.as_rational().is_none());
        assert_eq!(q.mul(&q), Mass::from(ratio(1, 5)));
        // (1 - q)(1 + q) = 1 - q²
        let one = Mass::one();
        assert_eq!(one.sub(&q).mul(&one.add(&q)), Mass::from(ratio(4, 5)));
    }

    #[test]
    fn perfect_powers_reduce() {
        let m = Mass::from_powers([(&ratio(4, 9), &ratio(1, 2))]);
        assert_eq!(m, Mass::from(ratio(2, 3)));
        let m = Mass::from_powers([(&ratio(64, 33), &ratio(1, 2))]);
        assert_eq!(m.mul(&m), Mass::from(ratio(64, 33)));
    }

    #[test]
    fn sign_and_interval() {
        let q = Mass::from_powers([(&ratio(1, 2), &ratio(1, 2))]);
        let (lo, hi) = q.interval(64);
        assert!(lo <= hi);
        assert!((rational_to_f64(&lo) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(q.compare(&Mass::from(ratio(7, 10)), 128), Comparison::Greater);
        assert_eq!(q.compare(&Mass::from(ratio(71, 100)), 128), Comparison::Less);
        assert_eq!(q.compare(&q.clone(), 128), Comparison::Equal);
    }
}
