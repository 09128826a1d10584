use num::{BigInt, BigRational, One, Signed, Zero};

use super::pdb::PdbError;
use super::powprob::Marginal;
use super::prob::{format_rational, Prob};
use crate::relmodel::{Atom, Fact};

/// Window size used for parametric families when none is given.
pub const DEFAULT_PARAMETRIC_WINDOW: usize = 20;

/// How many leading facts (or blocks, or worlds) of a family to consider.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Truncation {
    /// Everything for explicit families; [`DEFAULT_PARAMETRIC_WINDOW`] facts
    /// for parametric ones.
    #[default]
    Full,
    First(usize),
}

impl Truncation {
    pub fn limit(self, len: Option<usize>) -> usize {
        match (self, len) {
            (Truncation::Full, Some(l)) => l,
            (Truncation::Full, None) => DEFAULT_PARAMETRIC_WINDOW,
            (Truncation::First(n), Some(l)) => n.min(l),
            (Truncation::First(n), None) => n,
        }
    }
}

/// Closed-form marginal sequences `p_1, p_2, …` with finite sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// `p_i = a · ratio^i`, `0 < ratio < 1`.
    Geometric { a: BigRational, ratio: BigRational },
    /// `p_i = c / (i^s + d)`, integer `s ≥ 2`, `d ≥ 0`.
    InversePolynomial { c: BigRational, s: u32, d: BigRational },
}

impl ParamKind {
    pub fn validate(&self) -> Result<(), PdbError> {
        match self {
            ParamKind::Geometric { a, ratio } => {
                if !ratio.is_positive() || *ratio >= BigRational::one() {
                    return Err(PdbError::NonSummable(format!(
                        "geometric ratio {} must lie in (0, 1)",
                        format_rational(ratio)
                    )));
                }
                if !a.is_positive() {
                    return Err(PdbError::NonSummable("geometric scale must be positive".into()));
                }
            }
            ParamKind::InversePolynomial { c, s, d } => {
                if *s < 2 {
                    return Err(PdbError::NonSummable(format!("exponent s = {s} < 2 diverges")));
                }
                if !c.is_positive() || d.is_negative() {
                    return Err(PdbError::NonSummable("need c > 0 and d ≥ 0".into()));
                }
            }
        }
        // Both sequences are decreasing, so p_1 ≤ 1 bounds all marginals.
        Prob::new(self.p_raw(1))?;
        Ok(())
    }

    fn p_raw(&self, i: u64) -> BigRational {
        match self {
            ParamKind::Geometric { a, ratio } => a * num::pow(ratio.clone(), i as usize),
            ParamKind::InversePolynomial { c, s, d } => {
                let is = BigRational::from_integer(num::pow(BigInt::from(i), *s as usize));
                c / (is + d)
            }
        }
    }

    /// `p_i` for `i ≥ 1`.
    pub fn p(&self, i: u64) -> Prob {
        Prob::new(self.p_raw(i)).expect("validated family")
    }

    /// Upper bound on `∑_{i>n} p_i`: exact geometric tail, or the integral
    /// test `c/((s−1)·n^{s−1})` (plus `p_1` when `n = 0`).
    pub fn tail_bound(&self, n: u64) -> BigRational {
        match self {
            ParamKind::Geometric { a, ratio } => {
                a * num::pow(ratio.clone(), n as usize + 1) / (BigRational::one() - ratio)
            }
            ParamKind::InversePolynomial { c, s, .. } => {
                let s1 = BigInt::from(*s - 1);
                if n == 0 {
                    self.p_raw(1) + c / BigRational::from_integer(s1)
                } else {
                    c / BigRational::from_integer(s1 * num::pow(BigInt::from(n), *s as usize - 1))
                }
            }
        }
    }

    /// Upper bound on the total marginal sum.
    pub fn total_bound(&self) -> BigRational {
        self.tail_bound(0)
    }
}

/// Maps the index `i ≥ 1` of a parametric family to a fact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Template {
    /// `i ↦ R(i)`.
    UnaryIdentity(String),
    /// `i ↦ R(2i−1, 2i)`.
    DisjointPair(String),
}

impl Template {
    pub fn fact(&self, i: u64) -> Fact {
        let i = i as i64;
        match self {
            Template::UnaryIdentity(r) => Fact::new(r.clone(), vec![Atom::Int(i)]),
            Template::DisjointPair(r) => Fact::new(r.clone(), vec![Atom::Int(2 * i - 1), Atom::Int(2 * i)]),
        }
    }

    /// Inverse of [`Template::fact`].
    pub fn index_of(&self, fact: &Fact) -> Option<u64> {
        match (self, fact.args.as_slice()) {
            (Template::UnaryIdentity(r), [Atom::Int(i)]) if *r == fact.rel && *i >= 1 => Some(*i as u64),
            (Template::DisjointPair(r), [Atom::Int(a), Atom::Int(b)])
                if *r == fact.rel && *a >= 1 && *b == a + 1 && b % 2 == 0 =>
            {
                Some(*b as u64 / 2)
            }
            _ => None,
        }
    }

    pub fn relation(&self) -> &str {
        match self {
            Template::UnaryIdentity(r) | Template::DisjointPair(r) => r,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Template::UnaryIdentity(_) => 1,
            Template::DisjointPair(_) => 2,
        }
    }
}

/// A countable set of facts with marginals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactFamily {
    Explicit(Vec<(Fact, Marginal)>),
    Parametric { kind: ParamKind, template: Template },
}

impl FactFamily {
    pub fn explicit(facts: impl IntoIterator<Item = (Fact, Prob)>) -> Self {
        FactFamily::Explicit(facts.into_iter().map(|(f, p)| (f, p.into())).collect())
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            FactFamily::Explicit(v) => Some(v.len()),
            FactFamily::Parametric { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_finite(&self) -> bool {
        self.len().is_some()
    }

    /// The first facts of the family, in family order.
    pub fn window(&self, trunc: Truncation) -> Vec<(Fact, Marginal)> {
        let n = trunc.limit(self.len());
        match self {
            FactFamily::Explicit(v) => v[..n].to_vec(),
            FactFamily::Parametric { kind, template } => (1..=n as u64)
                .map(|i| (template.fact(i), Marginal::Exact(kind.p(i))))
                .collect(),
        }
    }

    /// Whether the window covers every fact of the family.
    pub fn window_is_full(&self, trunc: Truncation) -> bool {
        match self.len() {
            Some(l) => trunc.limit(Some(l)) == l,
            None => false,
        }
    }

    pub fn marginal(&self, fact: &Fact) -> Marginal {
        match self {
            FactFamily::Explicit(v) => v
                .iter()
                .find(|(f, _)| f == fact)
                .map(|(_, p)| p.clone())
                .unwrap_or(Marginal::Exact(Prob::zero())),
            FactFamily::Parametric { kind, template } => match template.index_of(fact) {
                Some(i) => Marginal::Exact(kind.p(i)),
                None => Marginal::Exact(Prob::zero()),
            },
        }
    }

    /// Exact sum for explicit families (rational marginals only), closed-form
    /// bound for parametric ones.
    pub fn sum_bound(&self) -> Option<BigRational> {
        match self {
            FactFamily::Explicit(v) => v.iter().try_fold(BigRational::zero(), |acc, (_, m)| {
                m.as_exact().map(|p| acc + p.value())
            }),
            FactFamily::Parametric { kind, .. } => Some(kind.total_bound()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::prob::ratio;

    #[test]
    fn inverse_polynomial_marginals_and_tail() {
        let k = ParamKind::InversePolynomial {
            c: ratio(1, 1),
            s: 2,
            d: ratio(1, 1),
        };
        k.validate().unwrap();
        assert_eq!(k.p(1), Prob::ratio(1, 2));
        assert_eq!(k.p(3), Prob::ratio(1, 10));
        assert_eq!(k.tail_bound(4), ratio(1, 4));
        // The bound really dominates a long partial tail.
        let partial: BigRational = (5..400u64).map(|i| k.p(i).into_inner()).sum();
        assert!(partial < k.tail_bound(4));
    }

    #[test]
    fn geometric_tail_is_exact_series() {
        let k = ParamKind::Geometric {
            a: ratio(1, 1),
            ratio: ratio(1, 2),
        };
        assert_eq!(k.tail_bound(0), ratio(1, 1));
        assert_eq!(k.tail_bound(3), ratio(1, 8));
    }

    #[test]
    fn rejects_divergent_descriptors() {
        assert!(ParamKind::InversePolynomial { c: ratio(1, 1), s: 1, d: ratio(0, 1) }.validate().is_err());
        assert!(ParamKind::Geometric { a: ratio(1, 2), ratio: ratio(1, 1) }.validate().is_err());
        assert!(ParamKind::Geometric { a: ratio(3, 1), ratio: ratio(1, 2) }.validate().is_err());
    }

    #[test]
    fn templates_invert() {
        let t = Template::DisjointPair("E".into());
        assert_eq!(t.fact(3), Fact::ints("E", &[5, 6]));
        assert_eq!(t.index_of(&Fact::ints("E", &[5, 6])), Some(3));
        assert_eq!(t.index_of(&Fact::ints("E", &[6, 7])), None);
    }
}
