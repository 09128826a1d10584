use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A domain element.
///
/// The derived order is the canonical one: `Int < Str < CopyIdx < Bot`, each
/// kind ordered by its payload. `CopyIdx` and `Bot` are reserved for compilers
/// and never occur in user input.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Int(i64),
    Str(String),
    /// Copy identifier introduced by condition elimination (1-based).
    CopyIdx(u32),
    /// The dummy element `⊥`.
    Bot,
}

impl Atom {
    pub fn str(s: impl Into<String>) -> Self {
        Atom::Str(s.into())
    }

    pub fn is_reserved(&self) -> bool {
        matches!(self, Atom::CopyIdx(_) | Atom::Bot)
    }
}

impl From<i64> for Atom {
    fn from(v: i64) -> Self {
        Atom::Int(v)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Int(v) => write!(f, "{v}"),
            Atom::Str(s) => write!(f, "{s:?}"),
            Atom::CopyIdx(i) => write!(f, "_copy{i}"),
            Atom::Bot => write!(f, "_bot"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{rel}` has arity {expected}, got {found} arguments")]
    ArityMismatch {
        rel: String,
        expected: usize,
        found: usize,
    },
}

/// Relation names with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    relations: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new<I, S>(relations: I) -> Result<Self, SchemaError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, arity) in relations {
            let name = name.into();
            if map.insert(name.clone(), arity).is_some() {
                return Err(SchemaError::DuplicateRelation(name));
            }
        }
        Ok(Schema { relations: map })
    }

    pub fn arity(&self, rel: &str) -> Option<usize> {
        self.relations.get(rel).copied()
    }

    pub fn contains(&self, rel: &str) -> bool {
        self.relations.contains_key(rel)
    }

    /// Maximum arity, 0 for the empty schema.
    pub fn r_max(&self) -> usize {
        self.relations.values().copied().max().unwrap_or(0)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn check_fact(&self, fact: &Fact) -> Result<(), SchemaError> {
        match self.arity(&fact.rel) {
            None => Err(SchemaError::UnknownRelation(fact.rel.clone())),
            Some(a) if a != fact.args.len() => Err(SchemaError::ArityMismatch {
                rel: fact.rel.clone(),
                expected: a,
                found: fact.args.len(),
            }),
            Some(_) => Ok(()),
        }
    }

    /// Union of two schemas; fails if a shared name disagrees on arity.
    pub fn merge(&self, other: &Schema) -> Result<Schema, SchemaError> {
        let mut out = self.clone();
        for (n, a) in other.relations() {
            match out.relations.get(n) {
                Some(&b) if b != a => {
                    return Err(SchemaError::ArityMismatch {
                        rel: n.to_string(),
                        expected: b,
                        found: a,
                    })
                }
                _ => {
                    out.relations.insert(n.to_string(), a);
                }
            }
        }
        Ok(out)
    }
}

/// A ground atom `R(a1, …, an)`.
///
/// Ordered by relation name, then arguments under the [`Atom`] order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub rel: String,
    pub args: Vec<Atom>,
}

impl Fact {
    pub fn new(rel: impl Into<String>, args: Vec<Atom>) -> Self {
        Fact {
            rel: rel.into(),
            args,
        }
    }

    /// Shorthand for facts over integers.
    pub fn ints(rel: impl Into<String>, args: &[i64]) -> Self {
        Fact::new(rel, args.iter().map(|&v| Atom::Int(v)).collect())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// A finite set of facts, stored sorted and duplicate-free so that
/// structural equality is set equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    facts: Vec<Fact>,
}

impl Instance {
    pub fn empty() -> Self {
        Instance { facts: Vec::new() }
    }

    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Self {
        let mut facts: Vec<Fact> = facts.into_iter().collect();
        facts.sort();
        facts.dedup();
        Instance { facts }
    }

    /// Trusts the caller that `facts` is already sorted and deduplicated.
    pub(crate) fn from_sorted(facts: Vec<Fact>) -> Self {
        debug_assert!(facts.windows(2).all(|w| w[0] < w[1]));
        Instance { facts }
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Fact> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.binary_search(fact).is_ok()
    }

    pub fn is_subset(&self, other: &Instance) -> bool {
        self.facts.iter().all(|f| other.contains(f))
    }

    pub fn union(&self, other: &Instance) -> Instance {
        Instance::new(self.facts.iter().chain(other.facts.iter()).cloned())
    }

    /// Facts of relation `rel`, as a contiguous slice.
    pub fn relation(&self, rel: &str) -> &[Fact] {
        let lo = self.facts.partition_point(|f| f.rel.as_str() < rel);
        let hi = self.facts.partition_point(|f| f.rel.as_str() <= rel);
        &self.facts[lo..hi]
    }

    pub fn adom(&self) -> BTreeSet<Atom> {
        self.facts
            .iter()
            .flat_map(|f| f.args.iter().cloned())
            .collect()
    }

    pub fn check_schema(&self, schema: &Schema) -> Result<(), SchemaError> {
        self.facts.iter().try_for_each(|f| schema.check_fact(f))
    }
}

impl FromIterator<Fact> for Instance {
    fn from_iter<T: IntoIterator<Item = Fact>>(iter: T) -> Self {
        Instance::new(iter)
    }
}

impl<'a> IntoIterator for &'a Instance {
    type Item = &'a Fact;
    type IntoIter = std::slice::Iter<'a, Fact>;
    fn into_iter(self) -> Self::IntoIter {
        self.facts.iter()
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{fact}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_order_is_int_str_copy_bot() {
        let mut v = vec![
            Atom::Bot,
            Atom::CopyIdx(1),
            Atom::str("a"),
            Atom::Int(7),
            Atom::Int(-2),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                Atom::Int(-2),
                Atom::Int(7),
                Atom::str("a"),
                Atom::CopyIdx(1),
                Atom::Bot
            ]
        );
    }

    #[test]
    fn instance_is_canonical() {
        let a = Instance::new([Fact::ints("S", &[2]), Fact::ints("R", &[1, 2]), Fact::ints("S", &[2])]);
        let b = Instance::new([Fact::ints("R", &[1, 2]), Fact::ints("S", &[2])]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a.relation("S"), &[Fact::ints("S", &[2])]);
        assert!(a.relation("T").is_empty());
    }

    #[test]
    fn schema_rejects_duplicates() {
        assert!(Schema::new([("R", 1), ("R", 2)]).is_err());
        let s = Schema::new([("R", 2), ("S", 1)]).unwrap();
        assert_eq!(s.r_max(), 2);
        assert!(s.check_fact(&Fact::ints("R", &[1])).is_err());
    }
}
