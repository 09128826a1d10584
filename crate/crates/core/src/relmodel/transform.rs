use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::atom::{Atom, Schema};
use super::formula::{fresh_name, Formula, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("formula is not in existential form (contains `{0}`)")]
    NotExistential(&'static str),
    #[error("relation `{0}` has no copy")]
    UncopiedRelation(String),
}

/// Rewrites `∨` and `∀` away (De Morgan, `∀x φ ↦ ¬∃x ¬φ`), cancelling
/// double negations. The result uses only atoms, `¬`, `∧` and `∃`.
pub fn to_existential_form(f: &Formula) -> Formula {
    fn neg(f: Formula) -> Formula {
        match f {
            Formula::Not(g) => *g,
            g => Formula::not(g),
        }
    }
    match f {
        Formula::Rel(..) | Formula::Eq(..) => f.clone(),
        Formula::Not(g) => neg(to_existential_form(g)),
        Formula::And(a, b) => Formula::and(to_existential_form(a), to_existential_form(b)),
        Formula::Or(a, b) => Formula::not(Formula::and(
            neg(to_existential_form(a)),
            neg(to_existential_form(b)),
        )),
        Formula::Exists(v, g) => Formula::exists(v.clone(), to_existential_form(g)),
        Formula::Forall(v, g) => {
            Formula::not(Formula::exists(v.clone(), neg(to_existential_form(g))))
        }
    }
}

pub fn is_existential_form(f: &Formula) -> bool {
    let mut ok = true;
    f.visit(&mut |g| {
        if matches!(g, Formula::Or(..) | Formula::Forall(..)) {
            ok = false;
        }
    });
    ok
}

/// Names of the copied relations: `R ↦ R′` where `R′` has arity `ar(R)+1`,
/// the extra first column holding the copy identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyNaming {
    map: BTreeMap<String, (String, usize)>,
}

impl CopyNaming {
    /// Primes each name of `schema` until it is fresh w.r.t. `avoid`.
    pub fn fresh(schema: &Schema, avoid: &Schema) -> Self {
        let mut used: BTreeSet<String> = avoid.relations().map(|(r, _)| r.to_string()).collect();
        used.extend(schema.relations().map(|(r, _)| r.to_string()));
        let map = schema
            .relations()
            .map(|(r, a)| {
                let mut name = format!("{r}'");
                while used.contains(&name) {
                    name.push('\'');
                }
                used.insert(name.clone());
                (r.to_string(), (name, a))
            })
            .collect();
        CopyNaming { map }
    }

    pub fn copy_of(&self, rel: &str) -> Option<&str> {
        self.map.get(rel).map(|(n, _)| n.as_str())
    }

    /// `(base name, copy name, base arity)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.map.iter().map(|(r, (c, a))| (r.as_str(), c.as_str(), *a))
    }

    pub fn copied_schema(&self) -> Schema {
        Schema::new(self.map.values().map(|(c, a)| (c.clone(), a + 1))).expect("copy names are unique")
    }
}

fn guards(x: &str, k: u32) -> Vec<Formula> {
    let v = Term::var(x);
    let mut out = vec![Formula::neq(v.clone(), Term::Const(Atom::Bot))];
    out.extend((1..=k).map(|j| Formula::neq(v.clone(), Term::Const(Atom::CopyIdx(j)))));
    out
}

/// `dom_i(x)`: `x` occurs in copy `i` or is one of `consts`.
fn copy_domain(x: &str, i: u32, naming: &CopyNaming, consts: &BTreeSet<Atom>) -> Formula {
    let mut taken: BTreeSet<String> = [x.to_string()].into_iter().collect();
    let mut parts = Vec::new();
    for (_, copy, arity) in naming.iter() {
        for pos in 0..arity {
            let ys: Vec<String> = (0..arity.saturating_sub(1)).map(|_| fresh_name("w", &mut taken)).collect();
            let mut terms = vec![Term::Const(Atom::CopyIdx(i))];
            let mut it = ys.iter();
            for p in 0..arity {
                if p == pos {
                    terms.push(Term::var(x));
                } else {
                    terms.push(Term::var(it.next().expect("enough fresh vars").clone()));
                }
            }
            parts.push(Formula::exists_many(ys.clone(), Formula::rel(copy, terms)));
        }
    }
    parts.extend(consts.iter().map(|c| Formula::eq(Term::var(x), Term::Const(c.clone()))));
    Formula::disj(parts)
}

/// `φ[i]`: relativizes an existential-form formula to copy `i` of `k`.
///
/// Atoms `R(ū)` become `R′(i, ū)`; equalities between variables and negated
/// subformulas get the guards `x ≠ ⊥ ∧ ⋀_j x ≠ j` on their free variables.
/// Additionally every quantifier `∃x` is restricted to `dom_i(x)`, the active
/// domain of copy `i` plus the constants of `φ`, so that for every `J` over
/// the copied schema `J ⊨ φ[i]` iff `J[i] ⊨ φ` under active-domain semantics.
pub fn relativize_to_copy(
    f: &Formula,
    i: u32,
    k: u32,
    naming: &CopyNaming,
) -> Result<Formula, TransformError> {
    let consts = f.constants();
    relativize(f, i, k, naming, &consts)
}

fn relativize(
    f: &Formula,
    i: u32,
    k: u32,
    naming: &CopyNaming,
    consts: &BTreeSet<Atom>,
) -> Result<Formula, TransformError> {
    match f {
        Formula::Rel(r, ts) => {
            let copy = naming
                .copy_of(r)
                .ok_or_else(|| TransformError::UncopiedRelation(r.clone()))?;
            let mut terms = vec![Term::Const(Atom::CopyIdx(i))];
            terms.extend(ts.iter().cloned());
            Ok(Formula::rel(copy, terms))
        }
        Formula::Eq(Term::Var(x), Term::Var(_)) => {
            let mut parts = vec![f.clone()];
            parts.extend(guards(x, k));
            Ok(Formula::conj(parts))
        }
        Formula::Eq(..) => Ok(f.clone()),
        Formula::Not(g) => {
            let mut parts = vec![Formula::not(relativize(g, i, k, naming, consts)?)];
            for x in g.free_variables() {
                parts.extend(guards(&x, k));
            }
            Ok(Formula::conj(parts))
        }
        Formula::And(a, b) => Ok(Formula::and(
            relativize(a, i, k, naming, consts)?,
            relativize(b, i, k, naming, consts)?,
        )),
        Formula::Exists(x, g) => Ok(Formula::exists(
            x.clone(),
            Formula::and(
                copy_domain(x, i, naming, consts),
                relativize(g, i, k, naming, consts)?,
            ),
        )),
        Formula::Or(..) => Err(TransformError::NotExistential("|")),
        Formula::Forall(..) => Err(TransformError::NotExistential("forall")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relmodel::parser::parse_formula;

    #[test]
    fn de_morgan_and_duality() {
        let f = to_existential_form(&parse_formula("A() | B()").unwrap());
        assert_eq!(f, parse_formula("!(!A() & !B())").unwrap());
        let g = to_existential_form(&parse_formula("forall x: R(x)").unwrap());
        assert_eq!(g, parse_formula("!(exists x: !R(x))").unwrap());
    }

    #[test]
    fn atom_and_negation_cases() {
        let schema = Schema::new([("R", 1)]).unwrap();
        let naming = CopyNaming::fresh(&schema, &schema);
        let f = relativize_to_copy(&parse_formula("R(x)").unwrap(), 2, 2, &naming).unwrap();
        assert_eq!(f, parse_formula("R'(_copy2,x)").unwrap());
        let g = relativize_to_copy(&parse_formula("!R(x)").unwrap(), 1, 2, &naming).unwrap();
        assert_eq!(
            g,
            parse_formula("!R'(_copy1,x) & !(x = _bot) & !(x = _copy1) & !(x = _copy2)").unwrap()
        );
    }

    #[test]
    fn rejects_non_existential() {
        let schema = Schema::new([("R", 1)]).unwrap();
        let naming = CopyNaming::fresh(&schema, &schema);
        assert!(relativize_to_copy(&parse_formula("R(x) | R(y)").unwrap(), 1, 1, &naming).is_err());
    }
}
