use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::probspace::{
    distributions_equal_at, map_ti_worlds, CondError, Distribution, Equality, Mass, PdbError, ProbError, TiPdb, Truncation,
    DEFAULT_PRECISION,
};
use crate::relmodel::{
    classify_fragment, fresh_name, Atom, EvalError, Formula, Fragment, Query, QueryError,
    PreparedQuery, PreparedView, SchemaError, Term, TransformError, View,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error(transparent)]
    Pdb(#[from] PdbError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Cond(#[from] CondError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("BID has no blocks")]
    EmptyBlocks,
    #[error("input must be a finite PDB")]
    NotFinite,
    #[error("world {0} has probability 0")]
    ZeroProbability(String),
    #[error("segment size c must be positive")]
    ZeroSegment,
    #[error("condition is not a sentence")]
    NotASentence,
    #[error("condition or view mentions reserved atom {0}")]
    ReservedAtom(String),
    #[error("view is in fragment {0:?}, not monotone (UCQ)")]
    NotMonotone(Fragment),
    #[error("{copies} copies of {facts} uncertain facts exceed the enumeration guard of {guard} bits")]
    CopyBudget { copies: usize, facts: usize, guard: u32 },
    #[error("worlds list contains {0} twice")]
    DuplicateWorld(String),
    #[error("world list is empty")]
    EmptyWorldList,
    #[error("no world of positive size within the horizon")]
    NoIncreasingSubsequence,
    #[error("marginal {0} is not the square of a rational")]
    NotASquare(String),
    #[error("fact {0} is not a binary edge")]
    NotAnEdgeRelation(String),
    #[error("edge ({0}) is a self-loop")]
    SelfLoop(String),
    #[error("edge ({0}) has different probabilities in its two orientations")]
    Asymmetric(String),
}

/// A TI base, an optional condition sentence and a view. Its law is the
/// push-forward of the conditioned base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    pub base: TiPdb,
    pub condition: Option<Formula>,
    pub view: View,
}

impl Representation {
    pub fn new(base: TiPdb, condition: Option<Formula>, view: View) -> Result<Self, CompileError> {
        if let Some(c) = &condition {
            if !c.is_sentence() {
                return Err(CompileError::NotASentence);
            }
            c.check_schema(&base.schema)?;
        }
        view.check_input(&base.schema, true)?;
        Ok(Representation { base, condition, view })
    }

    /// Exact law over the base window: enumerate, condition, push forward.
    pub fn law(&self, trunc: Truncation) -> Result<Distribution, CompileError> {
        let window = self.base.window(trunc);
        let condition = self.condition.as_ref().map(PreparedQuery::sentence).transpose()?;
        let view = PreparedView::new(&self.view)?;
        let map = map_ti_worlds(&window, |w| {
            if let Some(c) = &condition {
                if !c.holds(w)? {
                    return Ok(None);
                }
            }
            Ok(Some(view.apply(w)?))
        })?;
        let complete = self.base.family.window_is_full(trunc);
        match &self.condition {
            None => Ok(Distribution::from_masses(map, complete)),
            Some(_) => {
                let z = map.values().fold(Mass::zero(), |a, m| a.add(m));
                Ok(crate::probspace::normalize_masses(map, &z, complete)?)
            }
        }
    }
}

/// Compares the representation's law with `source`, world by world.
pub fn verify_representation(
    source: &Distribution,
    rep: &Representation,
    trunc: Truncation,
) -> Result<Equality, CompileError> {
    verify_representation_at(source, rep, trunc, DEFAULT_PRECISION)
}

pub fn verify_representation_at(
    source: &Distribution,
    rep: &Representation,
    trunc: Truncation,
    bits: u32,
) -> Result<Equality, CompileError> {
    Ok(distributions_equal_at(&rep.law(trunc)?, source, bits))
}

/// `base`, primed until it is not in `taken`; the result is reserved.
pub(crate) fn fresh_relation(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    taken.insert(name.clone());
    name
}

pub(crate) fn vars(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub(crate) fn var_terms(vs: &[String]) -> Vec<Term> {
    vs.iter().map(|v| Term::var(v.clone())).collect()
}

/// `x̄ = ā` as a conjunction of equalities.
pub(crate) fn tuple_eq(xs: &[String], args: &[Atom]) -> Formula {
    Formula::conj(
        xs.iter()
            .zip(args)
            .map(|(x, a)| Formula::eq(Term::var(x.clone()), Term::Const(a.clone()))),
    )
}

fn needs_domain_guard(f: &Formula) -> bool {
    if classify_fragment(f) > Fragment::CQ {
        return true;
    }
    // In a CQ every variable must also occur in a relation atom.
    let mut in_atoms = BTreeSet::new();
    f.visit(&mut |g| {
        if let Formula::Rel(_, ts) = g {
            in_atoms.extend(ts.iter().filter_map(|t| t.as_var().map(String::from)));
        }
    });
    f.all_variables().iter().any(|v| !in_atoms.contains(v))
}

/// `x ∈ adom(inner(J)) ∪ consts`, expressed over the inner input.
fn image_domain(x: &str, inner: &BTreeMap<String, (Vec<String>, Formula)>, consts: &BTreeSet<Atom>) -> Formula {
    let mut parts = Vec::new();
    for (vs, body) in inner.values() {
        for (pos, v) in vs.iter().enumerate() {
            let mut map = BTreeMap::new();
            map.insert(v.clone(), Term::var(x));
            let mut rest: Vec<String> = vs.iter().enumerate().filter(|(p, _)| *p != pos).map(|(_, w)| w.clone()).collect();
            // Rename the other head variables away from `x`.
            let mut taken = body.all_variables();
            taken.insert(x.to_string());
            for w in rest.iter_mut() {
                if w == x {
                    let fresh = fresh_name(w, &mut taken);
                    map.insert(w.clone(), Term::var(fresh.clone()));
                    *w = fresh;
                }
            }
            parts.push(Formula::exists_many(rest, body.rename_free(&map)));
        }
    }
    parts.extend(consts.iter().map(|c| Formula::eq(Term::var(x), Term::Const(c.clone()))));
    Formula::disj(parts)
}

fn substitute(
    f: &Formula,
    inner: &BTreeMap<String, (Vec<String>, Formula)>,
    guard: Option<&BTreeSet<Atom>>,
) -> Formula {
    match f {
        Formula::Rel(r, ts) => match inner.get(r) {
            Some((vs, body)) => {
                let map: BTreeMap<String, Term> = vs.iter().cloned().zip(ts.iter().cloned()).collect();
                body.rename_free(&map)
            }
            None => f.clone(),
        },
        Formula::Eq(..) => f.clone(),
        Formula::Not(g) => Formula::not(substitute(g, inner, guard)),
        Formula::And(a, b) => Formula::and(substitute(a, inner, guard), substitute(b, inner, guard)),
        Formula::Or(a, b) => Formula::or(substitute(a, inner, guard), substitute(b, inner, guard)),
        Formula::Exists(x, g) | Formula::Forall(x, g) => {
            let body = substitute(g, inner, guard);
            let exists = matches!(f, Formula::Exists(..));
            match guard {
                None if exists => Formula::exists(x.clone(), body),
                None => Formula::forall(x.clone(), body),
                Some(consts) => {
                    let dom = image_domain(x, inner, consts);
                    if exists {
                        Formula::exists(x.clone(), Formula::and(dom, body))
                    } else {
                        Formula::forall(x.clone(), Formula::implies(dom, body))
                    }
                }
            }
        }
    }
}

/// `outer ∘ inner`: replaces each atom over an inner output relation by the
/// inner query body. Quantifiers and head variables of the outer view are
/// restricted to the image's active domain unless the outer query is a CQ in
/// which every variable occurs in an atom (then the restriction is implied).
/// Inner bodies must not depend on extra constants in the active domain.
pub fn compose_views(outer: &View, inner: &View) -> Result<View, CompileError> {
    let inner_map: BTreeMap<String, (Vec<String>, Formula)> =
        inner.queries().map(|(n, q)| (n.to_string(), q.desugar())).collect();
    let mut out = Vec::new();
    for (name, q) in outer.queries() {
        let (hv, body) = q.desugar();
        let guarded = needs_domain_guard(&body);
        let consts = q.constants();
        let mut new_body = substitute(&body, &inner_map, guarded.then_some(&consts));
        if guarded {
            let doms: Vec<Formula> = hv.iter().map(|x| image_domain(x, &inner_map, &consts)).collect();
            new_body = Formula::conj(doms.into_iter().chain([new_body]));
        }
        out.push((name.to_string(), Query::with_vars(hv, new_body)?));
    }
    Ok(View::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::{enumerate_worlds, pushforward, Pdb, Prob};
    use crate::relmodel::{parse_formula, Fact};

    #[test]
    fn composition_matches_sequential_application() {
        let base = TiPdb::from_facts([
            (Fact::ints("E", &[1, 2]), Prob::ratio(1, 2)),
            (Fact::ints("E", &[2, 3]), Prob::ratio(1, 3)),
            (Fact::ints("E", &[3, 1]), Prob::ratio(1, 5)),
        ])
        .unwrap();
        let inner = View::single("P", Query::with_vars(["x", "y"], parse_formula("exists z: E(x,z) & E(z,y)").unwrap()).unwrap());
        let outers = [
            "P(x,x)",
            "!P(x,x)",
            "P(x,y) | P(y,x)",
            "forall y: P(x,y) | x = y",
        ];
        let d = enumerate_worlds(&Pdb::Ti(base), Truncation::Full).unwrap();
        for o in outers {
            let f = parse_formula(o).unwrap();
            let head: Vec<String> = f.free_variables().into_iter().collect();
            let outer = View::single("Q", Query::with_vars(head, f).unwrap());
            let composed = compose_views(&outer, &inner).unwrap();
            let seq = pushforward(&pushforward(&d, &inner).unwrap(), &outer).unwrap();
            let direct = pushforward(&d, &composed).unwrap();
            assert_eq!(seq, direct, "{o}");
        }
    }
}
