use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::atom::{Atom, Schema, SchemaError};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Atom),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn int(v: i64) -> Self {
        Term::Const(Atom::Int(v))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(a) => write!(f, "{a}"),
        }
    }
}

/// First-order formula over a relational vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    /// Relational atom `R(t1, …, tn)`.
    Rel(String, Vec<Term>),
    /// Equality atom `t1 = t2`.
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn rel(name: impl Into<String>, terms: Vec<Term>) -> Self {
        Formula::Rel(name.into(), terms)
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Eq(a, b)
    }

    pub fn neq(a: Term, b: Term) -> Self {
        Formula::not(Formula::Eq(a, b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(v: impl Into<String>, f: Formula) -> Self {
        Formula::Exists(v.into(), Box::new(f))
    }

    pub fn forall(v: impl Into<String>, f: Formula) -> Self {
        Formula::Forall(v.into(), Box::new(f))
    }

    /// `∃v1 … ∃vn: f`, innermost quantifier last.
    pub fn exists_many<S: Into<String>>(vars: impl IntoIterator<Item = S>, f: Formula) -> Self {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        vars.into_iter().rev().fold(f, |acc, v| Formula::exists(v, acc))
    }

    pub fn forall_many<S: Into<String>>(vars: impl IntoIterator<Item = S>, f: Formula) -> Self {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        vars.into_iter().rev().fold(f, |acc, v| Formula::forall(v, acc))
    }

    /// A constant-free valid sentence (`∀t: t = t`); true on every instance,
    /// including under an empty active domain.
    pub fn truth() -> Self {
        Formula::forall("t", Formula::eq(Term::var("t"), Term::var("t")))
    }

    /// Negation of [`Formula::truth`].
    pub fn falsity() -> Self {
        Formula::not(Formula::truth())
    }

    /// Left-nested conjunction; [`Formula::truth`] when empty.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::truth)
    }

    /// Left-nested disjunction; [`Formula::falsity`] when empty.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::falsity)
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::or(Formula::not(a), b)
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut term = |t: &Term, bound: &Vec<String>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
        };
        match self {
            Formula::Rel(_, ts) => ts.iter().for_each(|t| term(t, bound)),
            Formula::Eq(a, b) => {
                term(a, bound);
                term(b, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_variables().is_empty()
    }

    /// Every variable name occurring in the formula, free or bound.
    pub fn all_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Rel(_, ts) => out.extend(ts.iter().filter_map(|t| t.as_var().map(String::from))),
            Formula::Eq(a, b) => {
                out.extend([a, b].into_iter().filter_map(|t| t.as_var().map(String::from)))
            }
            Formula::Exists(v, _) | Formula::Forall(v, _) => {
                out.insert(v.clone());
            }
            _ => {}
        });
        out
    }

    /// Constants occurring in the formula (`adom(Φ)`).
    pub fn constants(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            let terms: Vec<&Term> = match f {
                Formula::Rel(_, ts) => ts.iter().collect(),
                Formula::Eq(a, b) => vec![a, b],
                _ => vec![],
            };
            for t in terms {
                if let Term::Const(a) = t {
                    out.insert(a.clone());
                }
            }
        });
        out
    }

    /// Relation names with their occurrence counts.
    pub fn relation_occurrences(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.visit(&mut |f| {
            if let Formula::Rel(r, _) = f {
                *out.entry(r.clone()).or_insert(0) += 1;
            }
        });
        out
    }

    /// Relation names with the arities they are used at.
    pub fn relation_arities(&self) -> BTreeMap<String, BTreeSet<usize>> {
        let mut out: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        self.visit(&mut |f| {
            if let Formula::Rel(r, ts) = f {
                out.entry(r.clone()).or_default().insert(ts.len());
            }
        });
        out
    }

    pub fn check_schema(&self, schema: &Schema) -> Result<(), SchemaError> {
        let mut err = None;
        self.visit(&mut |f| {
            if let (Formula::Rel(r, ts), None) = (f, &err) {
                match schema.arity(r) {
                    None => err = Some(SchemaError::UnknownRelation(r.clone())),
                    Some(a) if a != ts.len() => {
                        err = Some(SchemaError::ArityMismatch {
                            rel: r.clone(),
                            expected: a,
                            found: ts.len(),
                        })
                    }
                    _ => {}
                }
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// Number of nested connective/quantifier levels; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Rel(..) | Formula::Eq(..) => 0,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Rel(..) | Formula::Eq(..) => {}
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Flattens nested `And` nodes into their operands.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Renames every free occurrence of a variable according to `map`.
    /// Bound variables that would capture an incoming name are renamed first.
    pub fn rename_free(&self, map: &BTreeMap<String, Term>) -> Formula {
        let mut taken: BTreeSet<String> = self.all_variables();
        for t in map.values() {
            if let Term::Var(v) = t {
                taken.insert(v.clone());
            }
        }
        self.subst_terms(map, &mut taken)
    }

    fn subst_terms(&self, map: &BTreeMap<String, Term>, taken: &mut BTreeSet<String>) -> Formula {
        let st = |t: &Term| match t {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
            c => c.clone(),
        };
        match self {
            Formula::Rel(r, ts) => Formula::Rel(r.clone(), ts.iter().map(st).collect()),
            Formula::Eq(a, b) => Formula::Eq(st(a), st(b)),
            Formula::Not(f) => Formula::not(f.subst_terms(map, taken)),
            Formula::And(a, b) => Formula::and(a.subst_terms(map, taken), b.subst_terms(map, taken)),
            Formula::Or(a, b) => Formula::or(a.subst_terms(map, taken), b.subst_terms(map, taken)),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let mut inner = map.clone();
                inner.remove(v);
                let captures = inner
                    .values()
                    .any(|t| matches!(t, Term::Var(w) if w == v));
                let (v2, body) = if captures {
                    let fresh = fresh_name(v, taken);
                    let mut m = inner.clone();
                    m.insert(v.clone(), Term::Var(fresh.clone()));
                    (fresh, f.subst_terms(&m, taken))
                } else {
                    (v.clone(), f.subst_terms(&inner, taken))
                };
                if matches!(self, Formula::Exists(..)) {
                    Formula::exists(v2, body)
                } else {
                    Formula::forall(v2, body)
                }
            }
        }
    }
}

/// Returns a variable name derived from `base` not in `taken`, and reserves it.
pub fn fresh_name(base: &str, taken: &mut BTreeSet<String>) -> String {
    let stem: String = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_').to_string();
    let stem = if stem.is_empty() { "v".to_string() } else { stem };
    let mut i = 0usize;
    loop {
        let cand = format!("{stem}_{i}");
        if !taken.contains(&cand) {
            taken.insert(cand.clone());
            return cand;
        }
        i += 1;
    }
}

// Printing. Precedence, loosest first: quantifiers, `|`, `&`, `!`.
// Binary operators associate to the left, so a right operand of the same
// operator is parenthesised; quantifiers used as operands always are.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn prec(g: &Formula) -> u8 {
            match g {
                Formula::Exists(..) | Formula::Forall(..) => 0,
                Formula::Or(..) => 1,
                Formula::And(..) => 2,
                _ => 3,
            }
        }
        fn wrap(g: &Formula, paren: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if paren {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        }
        match self {
            Formula::Rel(r, ts) => {
                write!(f, "{r}(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(g) => {
                write!(f, "!")?;
                wrap(g, prec(g) < 3 || matches!(**g, Formula::Eq(..)), f)
            }
            Formula::And(a, b) => {
                wrap(a, prec(a) < 2, f)?;
                write!(f, " & ")?;
                wrap(b, prec(b) <= 2, f)
            }
            Formula::Or(a, b) => {
                wrap(a, prec(a) < 1, f)?;
                write!(f, " | ")?;
                wrap(b, prec(b) <= 1, f)
            }
            Formula::Exists(v, g) => write!(f, "exists {v}: {g}"),
            Formula::Forall(v, g) => write!(f, "forall {v}: {g}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("free variable `{0}` of the body does not occur in the head")]
    FreeVariableNotInHead(String),
    #[error("output relation `{rel}` has arity {expected}, query head has {found} terms")]
    HeadArity {
        rel: String,
        expected: usize,
        found: usize,
    },
    #[error("output relation `{0}` clashes with an input relation")]
    OutputClash(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// A formula with an ordered head tuple. Head terms may repeat variables or
/// be constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub head: Vec<Term>,
    pub body: Formula,
}

impl Query {
    pub fn new(head: Vec<Term>, body: Formula) -> Result<Self, QueryError> {
        let q = Query { head, body };
        q.check()?;
        Ok(q)
    }

    /// Query whose head is the given distinct variables.
    pub fn with_vars<S: Into<String>>(vars: impl IntoIterator<Item = S>, body: Formula) -> Result<Self, QueryError> {
        Query::new(vars.into_iter().map(|v| Term::Var(v.into())).collect(), body)
    }

    pub fn sentence(body: Formula) -> Result<Self, QueryError> {
        Query::new(Vec::new(), body)
    }

    pub fn arity(&self) -> usize {
        self.head.len()
    }

    fn check(&self) -> Result<(), QueryError> {
        let head_vars: BTreeSet<&str> = self.head.iter().filter_map(Term::as_var).collect();
        match self
            .body
            .free_variables()
            .into_iter()
            .find(|v| !head_vars.contains(v.as_str()))
        {
            Some(v) => Err(QueryError::FreeVariableNotInHead(v)),
            None => Ok(()),
        }
    }

    /// Rewrites to a head of pairwise distinct variables, moving repeated
    /// variables and constants into equalities in the body.
    pub fn desugar(&self) -> (Vec<String>, Formula) {
        let mut taken = self.body.all_variables();
        taken.extend(self.head.iter().filter_map(|t| t.as_var().map(String::from)));
        let mut vars: Vec<String> = Vec::new();
        let mut extra = Vec::new();
        for t in &self.head {
            match t {
                Term::Var(v) if !vars.contains(v) => vars.push(v.clone()),
                _ => {
                    let fresh = fresh_name("h", &mut taken);
                    extra.push(Formula::eq(Term::Var(fresh.clone()), t.clone()));
                    vars.push(fresh);
                }
            }
        }
        let body = extra
            .into_iter()
            .fold(self.body.clone(), Formula::and);
        (vars, body)
    }

    pub fn constants(&self) -> BTreeSet<Atom> {
        let mut c = self.body.constants();
        for t in &self.head {
            if let Term::Const(a) = t {
                c.insert(a.clone());
            }
        }
        c
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, t) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ") <- {}", self.body)
    }
}

/// One query per output relation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct View {
    queries: BTreeMap<String, Query>,
}

impl View {
    pub fn new(queries: impl IntoIterator<Item = (String, Query)>) -> Self {
        View {
            queries: queries.into_iter().collect(),
        }
    }

    pub fn single(name: impl Into<String>, query: Query) -> Self {
        View::new([(name.into(), query)])
    }

    /// `R(x̄) := R(x̄)` for every relation of `schema`.
    pub fn identity(schema: &Schema) -> Self {
        View::new(schema.relations().map(|(r, a)| {
            let vars: Vec<String> = (0..a).map(|i| format!("x{i}")).collect();
            let body = Formula::rel(r, vars.iter().map(|v| Term::var(v.clone())).collect());
            (r.to_string(), Query::with_vars(vars, body).expect("identity query is well formed"))
        }))
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &Query)> {
        self.queries.iter().map(|(n, q)| (n.as_str(), q))
    }

    pub fn query(&self, name: &str) -> Option<&Query> {
        self.queries.get(name)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn output_schema(&self) -> Schema {
        Schema::new(self.queries.iter().map(|(n, q)| (n.clone(), q.arity())))
            .expect("view output names are unique")
    }

    /// Maximum head arity `r`.
    pub fn max_arity(&self) -> usize {
        self.queries.values().map(Query::arity).max().unwrap_or(0)
    }

    /// `adom(V)`: constants of all queries.
    pub fn constants(&self) -> BTreeSet<Atom> {
        self.queries.values().flat_map(|q| q.constants()).collect()
    }

    /// Checks the bodies against an input schema and, unless `allow_overlap`,
    /// that output names are fresh.
    pub fn check_input(&self, input: &Schema, allow_overlap: bool) -> Result<(), QueryError> {
        for (name, q) in &self.queries {
            if !allow_overlap && input.contains(name) {
                return Err(QueryError::OutputClash(name.clone()));
            }
            q.body.check_schema(input)?;
        }
        Ok(())
    }
}
