use std::collections::BTreeSet;

use num::{BigInt, BigRational, BigUint, One, Zero};
use thiserror::Error;

use super::distribution::{CondError, Distribution};
use super::family::{FactFamily, Truncation};
use super::powprob::Marginal;
use super::prob::{format_rational, ProbError, Prob};
use crate::relmodel::{Atom, EvalError, Fact, Instance, Schema, SchemaError};

/// Largest number of uncertain facts (resp. `log₂` of the number of worlds)
/// enumeration will attempt.
pub const ENUMERATION_GUARD_BITS: u32 = 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PdbError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("fact {0} occurs more than once")]
    DuplicateFact(String),
    #[error("world {0} occurs more than once")]
    DuplicateWorld(String),
    #[error("block {block} has marginal sum {sum} > 1")]
    BlockSum { block: usize, sum: String },
    #[error("world probabilities sum to {0} > 1")]
    MassExceedsOne(String),
    #[error("family is not summable: {0}")]
    NonSummable(String),
    #[error("enumeration needs 2^{bits} worlds, above the guard of 2^{guard}")]
    WindowTooLarge { bits: u32, guard: u32 },
    #[error("operation needs rational marginals")]
    NonRational,
    #[error("world family member {index} has {size} facts, too many to materialise")]
    TooLarge { index: usize, size: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Cond(#[from] CondError),
}

/// A tuple-independent PDB.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TiPdb {
    pub schema: Schema,
    pub family: FactFamily,
}

/// Validates and builds a TI-PDB: facts fit the schema, are distinct, carry
/// marginals in `[0,1]`, and (for parametric families) have a finite sum.
pub fn ti_new(schema: Schema, family: FactFamily) -> Result<TiPdb, PdbError> {
    match &family {
        FactFamily::Explicit(facts) => {
            let mut seen = BTreeSet::new();
            for (f, _) in facts {
                schema.check_fact(f)?;
                if !seen.insert(f) {
                    return Err(PdbError::DuplicateFact(f.to_string()));
                }
            }
        }
        FactFamily::Parametric { kind, template } => {
            kind.validate()?;
            match schema.arity(template.relation()) {
                None => return Err(SchemaError::UnknownRelation(template.relation().into()).into()),
                Some(a) if a != template.arity() => {
                    return Err(SchemaError::ArityMismatch {
                        rel: template.relation().into(),
                        expected: a,
                        found: template.arity(),
                    }
                    .into())
                }
                _ => {}
            }
        }
    }
    Ok(TiPdb { schema, family })
}

impl TiPdb {
    /// Finite TI-PDB from rational marginals.
    pub fn explicit(schema: Schema, facts: impl IntoIterator<Item = (Fact, Prob)>) -> Result<Self, PdbError> {
        ti_new(schema, FactFamily::explicit(facts))
    }

    /// Finite TI-PDB whose schema is inferred from the facts.
    pub fn from_facts(facts: impl IntoIterator<Item = (Fact, Prob)>) -> Result<Self, PdbError> {
        let facts: Vec<(Fact, Prob)> = facts.into_iter().collect();
        let schema = infer_schema(facts.iter().map(|(f, _)| f))?;
        TiPdb::explicit(schema, facts)
    }

    pub fn window(&self, trunc: Truncation) -> Vec<(Fact, Marginal)> {
        self.family.window(trunc)
    }

    pub fn marginal(&self, fact: &Fact) -> Marginal {
        self.family.marginal(fact)
    }

    pub fn is_finite(&self) -> bool {
        self.family.is_finite()
    }

    /// All facts of a finite TI with their marginals.
    pub fn facts(&self) -> &[(Fact, Marginal)] {
        match &self.family {
            FactFamily::Explicit(v) => v,
            FactFamily::Parametric { .. } => &[],
        }
    }

    /// Rational marginals of a finite TI.
    pub fn exact_facts(&self) -> Result<Vec<(Fact, Prob)>, PdbError> {
        self.facts()
            .iter()
            .map(|(f, m)| m.as_exact().cloned().map(|p| (f.clone(), p)).ok_or(PdbError::NonRational))
            .collect()
    }
}

/// Smallest schema containing all the given facts.
pub fn infer_schema<'a>(facts: impl IntoIterator<Item = &'a Fact>) -> Result<Schema, SchemaError> {
    let mut rels: Vec<(String, usize)> = Vec::new();
    for f in facts {
        match rels.iter().find(|(r, _)| *r == f.rel) {
            Some((_, a)) if *a != f.arity() => {
                return Err(SchemaError::ArityMismatch {
                    rel: f.rel.clone(),
                    expected: *a,
                    found: f.arity(),
                })
            }
            Some(_) => {}
            None => rels.push((f.rel.clone(), f.arity())),
        }
    }
    Schema::new(rels)
}

/// A block-independent-disjoint PDB with explicit blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidPdb {
    pub schema: Schema,
    blocks: Vec<Vec<(Fact, Prob)>>,
    residuals: Vec<Prob>,
}

/// Validates and builds a BID-PDB; residuals `r_i = 1 − ∑_j p_{i,j}`.
pub fn bid_new(schema: Schema, blocks: Vec<Vec<(Fact, Prob)>>) -> Result<BidPdb, PdbError> {
    let mut seen = BTreeSet::new();
    let mut residuals = Vec::with_capacity(blocks.len());
    for (i, block) in blocks.iter().enumerate() {
        let mut sum = BigRational::zero();
        for (f, p) in block {
            schema.check_fact(f)?;
            if !seen.insert(f.clone()) {
                return Err(PdbError::DuplicateFact(f.to_string()));
            }
            sum += p.value();
        }
        if sum > BigRational::one() {
            return Err(PdbError::BlockSum {
                block: i,
                sum: format_rational(&sum),
            });
        }
        residuals.push(Prob::new(BigRational::one() - sum)?);
    }
    Ok(BidPdb {
        schema,
        blocks,
        residuals,
    })
}

impl BidPdb {
    pub fn from_blocks(blocks: Vec<Vec<(Fact, Prob)>>) -> Result<Self, PdbError> {
        let schema = infer_schema(blocks.iter().flatten().map(|(f, _)| f))?;
        bid_new(schema, blocks)
    }

    pub fn blocks(&self) -> &[Vec<(Fact, Prob)>] {
        &self.blocks
    }

    pub fn residuals(&self) -> &[Prob] {
        &self.residuals
    }

    pub fn marginal(&self, fact: &Fact) -> Prob {
        self.blocks
            .iter()
            .flatten()
            .find(|(f, _)| f == fact)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Prob::zero)
    }

    /// The TI-PDB with the same facts, viewing each fact as its own block.
    pub fn singleton_blocks(ti: &TiPdb) -> Result<Self, PdbError> {
        bid_new(ti.schema.clone(), ti.exact_facts()?.into_iter().map(|fp| vec![fp]).collect())
    }
}

/// Cataloged countable PDBs given by `(|D_i|, P(D_i))` for `i = 1, 2, …`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorldFamily {
    /// `|D_i| = i`, `P(D_i) ∝ 2^{−i²}`, normalised over the truncation.
    SquareExponential,
    /// `|D_i| = 2^i`, `P(D_i) = 3/4^i`.
    DoublingSizes,
}

impl WorldFamily {
    pub fn size(&self, i: usize) -> BigUint {
        match self {
            WorldFamily::SquareExponential => BigUint::from(i),
            WorldFamily::DoublingSizes => BigUint::one() << i,
        }
    }

    /// `(size, probability)` for `i = 1..=n`.
    pub fn terms(&self, n: usize) -> Vec<(BigUint, BigRational)> {
        match self {
            WorldFamily::SquareExponential => {
                let raw: Vec<BigRational> = (1..=n)
                    .map(|i| BigRational::new(BigInt::one(), BigInt::one() << (i * i)))
                    .collect();
                let z: BigRational = raw.iter().sum();
                (1..=n).zip(raw).map(|(i, p)| (self.size(i), p / &z)).collect()
            }
            WorldFamily::DoublingSizes => (1..=n)
                .map(|i| {
                    (
                        self.size(i),
                        BigRational::new(BigInt::from(3), BigInt::one() << (2 * i)),
                    )
                })
                .collect(),
        }
    }

    /// `D_i = {rel(1), …, rel(|D_i|)}` for `i ≤ n`, as an explicit PDB.
    pub fn materialize(&self, n: usize, rel: &str) -> Result<Distribution, PdbError> {
        let mut worlds = Vec::new();
        for (i, (s, p)) in self.terms(n).into_iter().enumerate() {
            let size: usize = s
                .try_into()
                .ok()
                .filter(|&s: &usize| s <= 1 << 16)
                .ok_or_else(|| PdbError::TooLarge {
                    index: i + 1,
                    size: self.size(i + 1).to_string(),
                })?;
            let inst = Instance::new((1..=size as i64).map(|j| Fact::new(rel, vec![Atom::Int(j)])));
            worlds.push((inst, Prob::new(p)?));
        }
        Distribution::explicit(worlds)
    }
}

/// Any of the supported PDB descriptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pdb {
    Ti(TiPdb),
    Bid(BidPdb),
    Explicit(Distribution),
    Family(WorldFamily),
}

impl Pdb {
    pub fn marginal(&self, fact: &Fact) -> Marginal {
        match self {
            Pdb::Ti(t) => t.marginal(fact),
            Pdb::Bid(b) => Marginal::Exact(b.marginal(fact)),
            Pdb::Explicit(d) => match d.marginal(fact).as_rational() {
                Some(r) => Marginal::Exact(Prob::new(r.clone()).expect("marginal in range")),
                None => Marginal::Exact(Prob::zero()),
            },
            Pdb::Family(_) => Marginal::Exact(Prob::zero()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::family::{ParamKind, Template};
    use crate::probspace::prob::ratio;

    #[test]
    fn ti_validation() {
        let s = Schema::new([("A", 1)]).unwrap();
        assert!(TiPdb::explicit(s.clone(), [(Fact::ints("A", &[1]), Prob::ratio(1, 2)), (Fact::ints("A", &[2]), Prob::ratio(1, 2))]).is_ok());
        assert!(TiPdb::explicit(s.clone(), [(Fact::ints("A", &[1]), Prob::ratio(1, 2)), (Fact::ints("A", &[1]), Prob::ratio(1, 3))]).is_err());
        assert!("3/2".parse::<Prob>().is_err());
        let s = Schema::new([("R", 1)]).unwrap();
        let fam = FactFamily::Parametric {
            kind: ParamKind::InversePolynomial { c: ratio(1, 1), s: 2, d: ratio(1, 1) },
            template: Template::UnaryIdentity("R".into()),
        };
        assert!(ti_new(s, fam).is_ok());
    }

    #[test]
    fn bid_validation() {
        let f = Fact::ints("R", &[1]);
        let g = Fact::ints("R", &[2]);
        let b = BidPdb::from_blocks(vec![vec![(f.clone(), Prob::ratio(1, 2)), (g.clone(), Prob::ratio(1, 2))]]).unwrap();
        assert!(b.residuals()[0].is_zero());
        let b = BidPdb::from_blocks(vec![vec![(f.clone(), Prob::ratio(1, 3))]]).unwrap();
        assert_eq!(b.residuals()[0], Prob::ratio(2, 3));
        let e = BidPdb::from_blocks(vec![vec![(f.clone(), Prob::ratio(2, 3)), (g, Prob::ratio(1, 2))]]).unwrap_err();
        assert!(matches!(e, PdbError::BlockSum { .. }));
        assert!(BidPdb::from_blocks(vec![vec![(f.clone(), Prob::ratio(1, 3))], vec![(f, Prob::ratio(1, 3))]]).is_err());
    }

    #[test]
    fn world_families_are_normalised() {
        let t = WorldFamily::SquareExponential.terms(5);
        assert_eq!(t.iter().map(|(_, p)| p.clone()).sum::<BigRational>(), BigRational::one());
        let t = WorldFamily::DoublingSizes.terms(10);
        let s: BigRational = t.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(s, BigRational::one() - BigRational::new(1.into(), BigInt::one() << 20));
    }
}
