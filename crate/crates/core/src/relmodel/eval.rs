//! Active-domain evaluation.
//!
//! Formulas are evaluated bottom-up into tables of satisfying assignments
//! over interned atoms. Quantifiers and complements range over
//! `adom(D, Φ)`; over an empty domain `∃` is false and `∀` is true.

use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use rustc_hash::{FxHashMap, FxHashSet};

use thiserror::Error;

use super::atom::{Atom, Fact, Instance};
use super::formula::{Formula, Query, QueryError, Term, View};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("atom over `{rel}` has {found} terms but the instance stores arity {expected}")]
    Arity {
        rel: String,
        expected: usize,
        found: usize,
    },
}

/// `adom(D, Φ)`: atoms of the instance together with the formula's constants.
pub fn active_domain(instance: &Instance, formula: &Formula) -> BTreeSet<Atom> {
    let mut d = instance.adom();
    d.extend(formula.constants());
    d
}

type Row = Vec<u32>;

#[derive(Clone, Debug)]
struct Table {
    vars: Vec<String>,
    rows: FxHashSet<Row>,
}

impl Table {
    fn truth(v: bool) -> Table {
        let mut rows = FxHashSet::default();
        if v {
            rows.insert(Vec::new());
        }
        Table {
            vars: Vec::new(),
            rows,
        }
    }

    fn col(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|w| w == v)
    }

    fn project(&self, keep: &[String]) -> Table {
        let idx: Vec<usize> = keep.iter().map(|v| self.col(v).expect("projected var present")).collect();
        Table {
            vars: keep.to_vec(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        }
    }
}

struct Ctx<'a> {
    n: u32,
    index: HashMap<&'a Atom, u32>,
    rels: HashMap<&'a str, Vec<Row>>,
    /// Structural hashes of the closed, non-atomic subformulas of the body,
    /// keyed by node address.
    closed: &'a FxHashMap<usize, u64>,
    /// Truth tables of closed subformulas already evaluated (compiled views
    /// repeat the same sentences many times).
    memo: RefCell<FxHashMap<u64, Vec<(&'a Formula, Table)>>>,
}

/// Free variables and structural hash of every node, bottom-up.
fn annotate(f: &Formula, closed: &mut FxHashMap<usize, u64>) -> (BTreeSet<String>, u64) {
    let mut h = DefaultHasher::new();
    std::mem::discriminant(f).hash(&mut h);
    let fv = match f {
        Formula::Rel(..) | Formula::Eq(..) => {
            f.hash(&mut h);
            return (f.free_variables(), h.finish());
        }
        Formula::Not(g) => {
            let (fv, hg) = annotate(g, closed);
            hg.hash(&mut h);
            fv
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (mut fa, ha) = annotate(a, closed);
            let (fb, hb) = annotate(b, closed);
            (ha, hb).hash(&mut h);
            fa.extend(fb);
            fa
        }
        Formula::Exists(x, g) | Formula::Forall(x, g) => {
            let (mut fv, hg) = annotate(g, closed);
            (x, hg).hash(&mut h);
            fv.remove(x);
            fv
        }
    };
    let hash = h.finish();
    if fv.is_empty() {
        closed.insert(f as *const Formula as usize, hash);
    }
    (fv, hash)
}

impl<'a> Ctx<'a> {
    fn new(instance: &'a Instance, adom: &'a [Atom], closed: &'a FxHashMap<usize, u64>) -> Ctx<'a> {
        let index: HashMap<&Atom, u32> = adom.iter().enumerate().map(|(i, a)| (a, i as u32)).collect();
        let mut rels: HashMap<&str, Vec<Row>> = HashMap::new();
        for f in instance {
            rels.entry(f.rel.as_str())
                .or_default()
                .push(f.args.iter().map(|a| index[a]).collect());
        }
        Ctx {
            n: adom.len() as u32,
            index,
            rels,
            closed,
            memo: RefCell::new(FxHashMap::default()),
        }
    }

    fn cid(&self, a: &Atom) -> u32 {
        self.index[a]
    }

    /// Extends `t` with every combination of values for `extra` variables.
    fn extend(&self, t: Table, extra: &[String]) -> Table {
        let mut vars = t.vars;
        let mut rows: Vec<Row> = t.rows.into_iter().collect();
        for v in extra {
            vars.push(v.clone());
            let mut next = Vec::with_capacity(rows.len() * self.n as usize);
            for r in &rows {
                for a in 0..self.n {
                    let mut r2 = r.clone();
                    r2.push(a);
                    next.push(r2);
                }
            }
            rows = next;
        }
        Table {
            vars,
            rows: rows.into_iter().collect(),
        }
    }

    /// Reorders/extends `t` to exactly `vars`.
    fn align(&self, t: Table, vars: &[String]) -> Table {
        let missing: Vec<String> = vars.iter().filter(|v| t.col(v).is_none()).cloned().collect();
        let t = self.extend(t, &missing);
        if t.vars == vars {
            t
        } else {
            t.project(vars)
        }
    }

    fn complement(&self, t: &Table) -> Table {
        let full = self.extend(Table::truth(true), &t.vars);
        Table {
            vars: full.vars,
            rows: full.rows.into_iter().filter(|r| !t.rows.contains(r)).collect(),
        }
    }

    fn join(&self, a: Table, b: Table) -> Table {
        let shared: Vec<(usize, usize)> = a
            .vars
            .iter()
            .enumerate()
            .filter_map(|(i, v)| b.col(v).map(|j| (i, j)))
            .collect();
        let b_extra: Vec<usize> = (0..b.vars.len()).filter(|j| !shared.iter().any(|s| s.1 == *j)).collect();
        let mut index: FxHashMap<Row, Vec<&Row>> = FxHashMap::default();
        for r in &b.rows {
            index.entry(shared.iter().map(|&(_, j)| r[j]).collect()).or_default().push(r);
        }
        let mut vars = a.vars.clone();
        vars.extend(b_extra.iter().map(|&j| b.vars[j].clone()));
        let mut rows = FxHashSet::default();
        for r in &a.rows {
            let key: Row = shared.iter().map(|&(i, _)| r[i]).collect();
            if let Some(ms) = index.get(&key) {
                for m in ms {
                    let mut out = r.clone();
                    out.extend(b_extra.iter().map(|&j| m[j]));
                    rows.insert(out);
                }
            }
        }
        Table { vars, rows }
    }

    /// Rows of `a` with no match in `b`; requires `b.vars ⊆ a.vars`.
    fn antijoin(&self, a: Table, b: &Table) -> Table {
        let idx: Vec<usize> = b.vars.iter().map(|v| a.col(v).expect("antijoin vars subset")).collect();
        let rows = a
            .rows
            .into_iter()
            .filter(|r| !b.rows.contains(&idx.iter().map(|&i| r[i]).collect::<Row>()))
            .collect();
        Table { vars: a.vars, rows }
    }

    fn eval(&self, f: &'a Formula) -> Result<Table, EvalError> {
        let Some(&h) = self.closed.get(&(f as *const Formula as usize)) else {
            return self.eval_node(f);
        };
        if let Some(bucket) = self.memo.borrow().get(&h) {
            if let Some((_, t)) = bucket.iter().find(|(g, _)| std::ptr::eq(*g, f) || *g == f) {
                return Ok(t.clone());
            }
        }
        let t = self.eval_node(f)?;
        self.memo.borrow_mut().entry(h).or_default().push((f, t.clone()));
        Ok(t)
    }

    fn eval_node(&self, f: &'a Formula) -> Result<Table, EvalError> {
        match f {
            Formula::Rel(r, ts) => self.eval_rel(r, ts),
            Formula::Eq(a, b) => Ok(self.eval_eq(a, b)),
            Formula::Not(g) => {
                if let Formula::Not(h) = &**g {
                    return self.eval(h);
                }
                Ok(self.complement(&self.eval(g)?))
            }
            Formula::And(..) => self.eval_and(f),
            Formula::Or(a, b) => {
                let ta = self.eval(a)?;
                let tb = self.eval(b)?;
                let mut vars = ta.vars.clone();
                vars.extend(tb.vars.iter().filter(|v| !ta.vars.contains(v)).cloned());
                let mut ta = self.align(ta, &vars);
                let tb = self.align(tb, &vars);
                ta.rows.extend(tb.rows);
                Ok(ta)
            }
            Formula::Exists(x, g) => {
                let t = self.eval(g)?;
                Ok(match t.col(x) {
                    Some(_) => {
                        let keep: Vec<String> = t.vars.iter().filter(|v| *v != x).cloned().collect();
                        t.project(&keep)
                    }
                    None if self.n == 0 => Table {
                        vars: t.vars,
                        rows: FxHashSet::default(),
                    },
                    None => t,
                })
            }
            Formula::Forall(x, g) => {
                let t = self.eval(g)?;
                let Some(c) = t.col(x) else {
                    // x does not occur free: ∀x g ≡ g unless the domain is empty.
                    return Ok(if self.n == 0 {
                        self.extend(Table::truth(true), &t.vars)
                    } else {
                        t
                    });
                };
                let keep: Vec<String> = t.vars.iter().filter(|v| *v != x).cloned().collect();
                if self.n == 0 {
                    return Ok(self.extend(Table::truth(true), &keep));
                }
                let mut counts: FxHashMap<Row, u32> = FxHashMap::default();
                for r in &t.rows {
                    let key: Row = r.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, &v)| v).collect();
                    *counts.entry(key).or_insert(0) += 1;
                }
                Ok(Table {
                    vars: keep,
                    rows: counts.into_iter().filter(|(_, n)| *n == self.n).map(|(k, _)| k).collect(),
                })
            }
        }
    }

    fn eval_rel(&self, r: &str, ts: &[Term]) -> Result<Table, EvalError> {
        let mut vars: Vec<String> = Vec::new();
        let mut slot: Vec<Result<usize, u32>> = Vec::with_capacity(ts.len());
        for t in ts {
            match t {
                Term::Var(v) => {
                    let i = vars.iter().position(|w| w == v).unwrap_or_else(|| {
                        vars.push(v.clone());
                        vars.len() - 1
                    });
                    slot.push(Ok(i));
                }
                Term::Const(a) => slot.push(Err(self.cid(a))),
            }
        }
        let mut rows = FxHashSet::default();
        if let Some(facts) = self.rels.get(r) {
            for tuple in facts {
                if tuple.len() != ts.len() {
                    return Err(EvalError::Arity {
                        rel: r.to_string(),
                        expected: tuple.len(),
                        found: ts.len(),
                    });
                }
                let mut row: Vec<Option<u32>> = vec![None; vars.len()];
                let ok = slot.iter().zip(tuple).all(|(s, &val)| match *s {
                    Err(c) => c == val,
                    Ok(i) => match row[i] {
                        Some(prev) => prev == val,
                        None => {
                            row[i] = Some(val);
                            true
                        }
                    },
                });
                if ok {
                    rows.insert(row.into_iter().map(|v| v.expect("bound")).collect());
                }
            }
        }
        Ok(Table { vars, rows })
    }

    fn eval_eq(&self, a: &Term, b: &Term) -> Table {
        match (a, b) {
            (Term::Const(x), Term::Const(y)) => Table::truth(x == y),
            (Term::Var(v), Term::Const(c)) | (Term::Const(c), Term::Var(v)) => Table {
                vars: vec![v.clone()],
                rows: [vec![self.cid(c)]].into_iter().collect(),
            },
            (Term::Var(x), Term::Var(y)) if x == y => Table {
                vars: vec![x.clone()],
                rows: (0..self.n).map(|i| vec![i]).collect(),
            },
            (Term::Var(x), Term::Var(y)) => Table {
                vars: vec![x.clone(), y.clone()],
                rows: (0..self.n).map(|i| vec![i, i]).collect(),
            },
        }
    }

    fn eval_and(&self, f: &'a Formula) -> Result<Table, EvalError> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for c in f.conjuncts() {
            match c {
                Formula::Not(g) => match &**g {
                    Formula::Not(h) => pos.push(&**h),
                    _ => neg.push(&**g),
                },
                other => pos.push(other),
            }
        }
        // Sentences first: a false one decides the conjunction.
        pos.sort_by_key(|g| !self.closed.contains_key(&(*g as *const Formula as usize)));
        let mut tables = Vec::with_capacity(pos.len());
        for g in pos {
            let t = self.eval(g)?;
            if t.rows.is_empty() {
                // Absent columns are unconstrained, so this is simply false.
                return Ok(Table::truth(false));
            }
            tables.push(t);
        }
        // Small tables first.
        tables.sort_by_key(|t| t.rows.len());
        let mut acc = Table::truth(true);
        for t in tables {
            if acc.rows.is_empty() {
                acc.vars.extend(t.vars.into_iter().filter(|v| !acc.vars.contains(v)).collect::<Vec<_>>());
                continue;
            }
            acc = self.join(acc, t);
        }
        for g in neg {
            if acc.rows.is_empty() {
                let mut vars = acc.vars.clone();
                vars.extend(g.free_variables().into_iter().filter(|v| !acc.vars.contains(v)));
                return Ok(Table {
                    vars,
                    rows: FxHashSet::default(),
                });
            }
            let gt = self.eval(g)?;
            let missing: Vec<String> = gt.vars.iter().filter(|v| acc.col(v).is_none()).cloned().collect();
            acc = self.extend(acc, &missing);
            acc = self.antijoin(acc, &gt);
        }
        Ok(acc)
    }
}

/// A query desugared and analysed once, for evaluation over many instances.
#[derive(Clone, Debug)]
pub struct PreparedQuery {
    vars: Vec<String>,
    // Boxed so that node addresses stay valid when the struct moves.
    body: Box<Formula>,
    consts: BTreeSet<Atom>,
    closed: FxHashMap<usize, u64>,
}

impl PreparedQuery {
    pub fn new(query: &Query) -> Result<Self, EvalError> {
        let (vars, body) = query.desugar();
        if let Some(v) = body.free_variables().into_iter().find(|v| !vars.contains(v)) {
            return Err(QueryError::FreeVariableNotInHead(v).into());
        }
        let body = Box::new(body);
        let mut closed = FxHashMap::default();
        annotate(&body, &mut closed);
        Ok(PreparedQuery {
            vars,
            consts: body.constants(),
            body,
            closed,
        })
    }

    pub fn sentence(f: &Formula) -> Result<Self, EvalError> {
        PreparedQuery::new(&Query::sentence(f.clone())?)
    }

    /// Satisfying head tuples over `adom(D, Φ)`, sorted.
    pub fn tuples(&self, instance: &Instance) -> Result<Vec<Vec<Atom>>, EvalError> {
        let mut adom = instance.adom();
        adom.extend(self.consts.iter().cloned());
        let adom: Vec<Atom> = adom.into_iter().collect();
        let ctx = Ctx::new(instance, &adom, &self.closed);
        let t = ctx.eval(&self.body)?;
        let t = ctx.align(t, &self.vars);
        let mut out: Vec<Vec<Atom>> = t
            .rows
            .into_iter()
            .map(|r| r.into_iter().map(|i| adom[i as usize].clone()).collect())
            .collect();
        out.sort();
        Ok(out)
    }

    /// For a sentence: whether it holds.
    pub fn holds(&self, instance: &Instance) -> Result<bool, EvalError> {
        Ok(!self.tuples(instance)?.is_empty())
    }
}

/// A view whose queries are prepared once.
#[derive(Clone, Debug)]
pub struct PreparedView {
    queries: Vec<(String, PreparedQuery)>,
}

impl PreparedView {
    pub fn new(view: &View) -> Result<Self, EvalError> {
        let queries = view
            .queries()
            .map(|(n, q)| Ok((n.to_string(), PreparedQuery::new(q)?)))
            .collect::<Result<_, EvalError>>()?;
        Ok(PreparedView { queries })
    }

    /// Union of the per-relation outputs.
    pub fn apply(&self, instance: &Instance) -> Result<Instance, EvalError> {
        let mut facts = Vec::new();
        for (name, q) in &self.queries {
            facts.extend(q.tuples(instance)?.into_iter().map(|args| Fact::new(name.as_str(), args)));
        }
        Ok(Instance::new(facts))
    }
}

/// Whether the sentence holds in `instance`.
pub fn satisfies(sentence: &Formula, instance: &Instance) -> Result<bool, EvalError> {
    PreparedQuery::sentence(sentence)?.holds(instance)
}

/// `Φ(D)`: the facts `name(ā)` for all satisfying `ā`. A sentence yields the
/// nullary fact `name()` or nothing.
pub fn evaluate(name: &str, query: &Query, instance: &Instance) -> Result<Instance, EvalError> {
    let tuples = PreparedQuery::new(query)?.tuples(instance)?;
    Ok(Instance::from_sorted(
        tuples.into_iter().map(|args| Fact::new(name, args)).collect(),
    ))
}

/// Union of the per-relation outputs.
pub fn apply_view(view: &View, instance: &Instance) -> Result<Instance, EvalError> {
    PreparedView::new(view)?.apply(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relmodel::parser::parse_formula;

    fn rs_query() -> Query {
        Query::with_vars(["x"], parse_formula("exists y: R(x,y) & S(y)").unwrap()).unwrap()
    }

    #[test]
    fn rs_world_rows() {
        let d = Instance::new([
            Fact::ints("R", &[1, 1]),
            Fact::ints("R", &[1, 2]),
            Fact::ints("R", &[2, 2]),
            Fact::ints("S", &[2]),
        ]);
        let out = evaluate("Q", &rs_query(), &d).unwrap();
        assert_eq!(out, Instance::new([Fact::ints("Q", &[1]), Fact::ints("Q", &[2])]));
        let d1 = Instance::new([Fact::ints("R", &[1, 1]), Fact::ints("R", &[1, 2]), Fact::ints("R", &[2, 2])]);
        assert!(evaluate("Q", &rs_query(), &d1).unwrap().is_empty());
    }

    #[test]
    fn adom_union() {
        let d = Instance::new([Fact::ints("R", &[1, 2])]);
        let f = parse_formula("R(x,5)").unwrap();
        assert_eq!(
            active_domain(&d, &f),
            [1, 2, 5].into_iter().map(Atom::Int).collect()
        );
        let d = Instance::new([Fact::ints("S", &[1]), Fact::ints("S", &[2])]);
        assert_eq!(
            active_domain(&d, &parse_formula("exists y: R(x,y) & S(y)").unwrap()),
            [1, 2].into_iter().map(Atom::Int).collect()
        );
        assert!(active_domain(&Instance::empty(), &parse_formula("exists x: R(x)").unwrap()).is_empty());
    }

    #[test]
    fn empty_domain_quantifiers() {
        let e = Instance::empty();
        assert!(!satisfies(&parse_formula("exists x: x = x").unwrap(), &e).unwrap());
        assert!(satisfies(&parse_formula("forall x: !(x = x)").unwrap(), &e).unwrap());
        assert!(satisfies(&Formula::truth(), &e).unwrap());
        assert!(!satisfies(&Formula::falsity(), &e).unwrap());
    }

    #[test]
    fn sentence_yields_nullary_fact() {
        let d = Instance::new([Fact::ints("S", &[1])]);
        let q = Query::sentence(parse_formula("exists x: S(x)").unwrap()).unwrap();
        assert_eq!(evaluate("B", &q, &d).unwrap(), Instance::new([Fact::new("B", vec![])]));
    }

    #[test]
    fn head_constants_and_repeats() {
        let d = Instance::new([Fact::ints("R", &[1]), Fact::ints("R", &[2])]);
        let q = Query::new(vec![Term::var("x"), Term::var("x"), Term::int(9)], parse_formula("R(x)").unwrap()).unwrap();
        let out = evaluate("Q", &q, &d).unwrap();
        assert_eq!(out, Instance::new([Fact::ints("Q", &[1, 1, 9]), Fact::ints("Q", &[2, 2, 9])]));
    }

    #[test]
    fn identity_view() {
        let d = Instance::new([Fact::ints("R", &[1, 2]), Fact::ints("S", &[3])]);
        let schema = crate::relmodel::Schema::new([("R", 2), ("S", 1)]).unwrap();
        assert_eq!(apply_view(&View::identity(&schema), &d).unwrap(), d);
    }

    #[test]
    fn head_var_absent_from_body_ranges_over_adom() {
        let d = Instance::new([Fact::ints("R", &[1]), Fact::ints("R", &[2])]);
        let q = Query::with_vars(["x", "y"], parse_formula("R(x)").unwrap()).unwrap();
        assert_eq!(evaluate("Q", &q, &d).unwrap().len(), 4);
    }
}
