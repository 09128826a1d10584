use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, Signed};

use crate::compilers::{CompileError, Representation};
use crate::probspace::{ti_new, FactFamily, ParamKind, Prob, Template, TiPdb};
use crate::relmodel::{parse_formula, Atom, Fact, Query, Schema, View};

/// Marginals of an undirected edge-independent graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeGraphSpec {
    /// Ordered pairs; an edge may be listed in one or both orientations.
    Explicit(BTreeMap<(Atom, Atom), Prob>),
    /// Edge `{2i−1, 2i}` with the `i`-th marginal of the family.
    Family(ParamKind),
}

impl EdgeGraphSpec {
    /// Reads a TI over one binary relation as an edge map.
    pub fn from_ti(ti: &TiPdb) -> Result<Self, CompileError> {
        match &ti.family {
            FactFamily::Parametric { kind, template: Template::DisjointPair(_) } => Ok(EdgeGraphSpec::Family(kind.clone())),
            _ => {
                let facts = ti.exact_facts()?;
                let mut map = BTreeMap::new();
                for (f, p) in facts {
                    match f.args.as_slice() {
                        [a, b] => {
                            map.insert((a.clone(), b.clone()), p);
                        }
                        _ => return Err(CompileError::NotAnEdgeRelation(f.to_string())),
                    }
                }
                Ok(EdgeGraphSpec::Explicit(map))
            }
        }
    }

    /// Undirected marginals keyed by `(a, b)` with `a < b`.
    fn undirected(&self) -> Result<BTreeMap<(Atom, Atom), Prob>, CompileError> {
        let EdgeGraphSpec::Explicit(map) = self else {
            unreachable!("explicit specs only")
        };
        let mut out: BTreeMap<(Atom, Atom), Prob> = BTreeMap::new();
        for ((a, b), p) in map {
            let edge = format!("{a},{b}");
            if a == b {
                return Err(CompileError::SelfLoop(edge));
            }
            let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if let Some(q) = out.get(&key) {
                if q != p {
                    return Err(CompileError::Asymmetric(edge));
                }
            }
            out.insert(key, p.clone());
        }
        Ok(out)
    }
}

fn edge_schema(rel: &str) -> Schema {
    Schema::new([(rel.to_string(), 2)]).expect("valid relation name")
}

/// TI over `rel(a, b)`, `a < b`, carrying `p_{a,b}`.
pub fn edge_graph_ti(spec: &EdgeGraphSpec, rel: &str) -> Result<TiPdb, CompileError> {
    let family = match spec {
        EdgeGraphSpec::Family(kind) => FactFamily::Parametric {
            kind: kind.clone(),
            template: Template::DisjointPair(rel.to_string()),
        },
        EdgeGraphSpec::Explicit(_) => FactFamily::explicit(
            spec.undirected()?
                .into_iter()
                .map(|((a, b), p)| (Fact::new(rel, vec![a, b]), p)),
        ),
    };
    Ok(ti_new(edge_schema(rel), family)?)
}

/// The undirected graph as the UCQ view `E(x,y) ∨ E(y,x)` over [`edge_graph_ti`].
pub fn edge_graph_ucq_rep(spec: &EdgeGraphSpec, rel: &str) -> Result<Representation, CompileError> {
    let base = edge_graph_ti(spec, rel)?;
    let body = parse_formula(&format!("{rel}(x,y) | {rel}(y,x)")).expect("well-formed");
    let view = View::single(rel, Query::with_vars(["x", "y"], body)?);
    Representation::new(base, None, view)
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer().sqrt(), r.denom().sqrt());
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| BigRational::new(n, d))
}

/// The undirected graph as the CQ view `E(x,y) ∧ E(y,x)` over a TI with
/// both orientations at marginal `√p_{a,b}`; needs rational square roots.
pub fn edge_graph_cq_rep(spec: &EdgeGraphSpec, rel: &str) -> Result<Representation, CompileError> {
    if matches!(spec, EdgeGraphSpec::Family(_)) {
        return Err(CompileError::NotFinite);
    }
    let mut facts = Vec::new();
    for ((a, b), p) in spec.undirected()? {
        let q = rational_sqrt(p.value()).ok_or_else(|| CompileError::NotASquare(p.to_string()))?;
        let q = Prob::new(q)?;
        facts.push((Fact::new(rel, vec![a.clone(), b.clone()]), q.clone()));
        facts.push((Fact::new(rel, vec![b, a]), q));
    }
    let base = ti_new(edge_schema(rel), FactFamily::explicit(facts))?;
    let body = parse_formula(&format!("{rel}(x,y) & {rel}(y,x)")).expect("well-formed");
    let view = View::single(rel, Query::with_vars(["x", "y"], body)?);
    Representation::new(base, None, view)
}

/// Undirected marginal of `{a, b}` in a law over directed facts.
pub fn edge_marginal(dist: &crate::probspace::Distribution, rel: &str, a: &Atom, b: &Atom) -> crate::probspace::Mass {
    dist.marginal(&Fact::new(rel, vec![a.clone(), b.clone()]))
}

/// Whether every world is symmetric and loop-free.
pub fn all_worlds_symmetric(dist: &crate::probspace::Distribution) -> bool {
    dist.support().all(|w| {
        let set: BTreeSet<&Fact> = w.iter().collect();
        w.iter().all(|f| match f.args.as_slice() {
            [a, b] => a != b && set.contains(&Fact::new(f.rel.clone(), vec![b.clone(), a.clone()])),
            _ => false,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::{ratio, Mass, Truncation};

    fn explicit(pairs: &[(i64, i64, Prob)]) -> EdgeGraphSpec {
        EdgeGraphSpec::Explicit(pairs.iter().map(|(a, b, p)| ((Atom::Int(*a), Atom::Int(*b)), p.clone())).collect())
    }

    #[test]
    fn single_edge_ucq() {
        let rep = edge_graph_ucq_rep(&explicit(&[(1, 2, Prob::ratio(1, 2))]), "E").unwrap();
        let law = rep.law(Truncation::Full).unwrap();
        assert_eq!(law.len(), 2);
        assert!(all_worlds_symmetric(&law));
        assert_eq!(edge_marginal(&law, "E", &Atom::Int(2), &Atom::Int(1)), Mass::from(ratio(1, 2)));
    }

    #[test]
    fn cq_squares() {
        let rep = edge_graph_cq_rep(&explicit(&[(1, 2, Prob::ratio(1, 4))]), "E").unwrap();
        let law = rep.law(Truncation::Full).unwrap();
        assert_eq!(edge_marginal(&law, "E", &Atom::Int(1), &Atom::Int(2)), Mass::from(ratio(1, 4)));
        assert!(matches!(edge_graph_cq_rep(&explicit(&[(1, 2, Prob::ratio(1, 2))]), "E"), Err(CompileError::NotASquare(_))));
        let asym = explicit(&[(1, 2, Prob::ratio(1, 2)), (2, 1, Prob::ratio(1, 3))]);
        assert!(matches!(edge_graph_ti(&asym, "E"), Err(CompileError::Asymmetric(_))));
    }
}
