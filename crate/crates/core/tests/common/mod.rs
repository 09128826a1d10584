//! Brute-force oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use pdbrep::probspace::{Distribution, Mass, Prob, TiPdb};
use pdbrep::relmodel::{Atom, Fact, Formula, Instance, Query, Schema, Term, View};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Law of independent facts, by plain subset enumeration.
pub fn ti_oracle(facts: &[(Fact, BigRational)]) -> BTreeMap<Instance, BigRational> {
    let mut out = BTreeMap::new();
    for mask in 0u64..(1 << facts.len()) {
        let mut p = BigRational::one();
        let mut w = Vec::new();
        for (i, (f, pf)) in facts.iter().enumerate() {
            if mask >> i & 1 == 1 {
                p *= pf;
                w.push(f.clone());
            } else {
                p *= BigRational::one() - pf;
            }
        }
        if !p.is_zero() {
            *out.entry(Instance::new(w)).or_insert_with(BigRational::zero) += p;
        }
    }
    out
}

/// Law of a BID: one choice per block (a fact or nothing), independently.
pub fn bid_oracle(blocks: &[Vec<(Fact, BigRational)>]) -> BTreeMap<Instance, BigRational> {
    let mut acc: Vec<(Vec<Fact>, BigRational)> = vec![(Vec::new(), BigRational::one())];
    for b in blocks {
        let rest = BigRational::one() - b.iter().map(|(_, p)| p.clone()).sum::<BigRational>();
        let mut next = Vec::new();
        for (w, p) in &acc {
            if !rest.is_zero() {
                next.push((w.clone(), p * &rest));
            }
            for (f, pf) in b {
                let mut w2 = w.clone();
                w2.push(f.clone());
                next.push((w2, p * pf));
            }
        }
        acc = next;
    }
    let mut out = BTreeMap::new();
    for (w, p) in acc {
        *out.entry(Instance::new(w)).or_insert_with(BigRational::zero) += p;
    }
    out
}

pub fn to_dist(m: BTreeMap<Instance, BigRational>) -> Distribution {
    Distribution::from_masses(m.into_iter().map(|(w, p)| (w, Mass::from(p))).collect(), true)
}

pub fn random_prob<R: Rng>(rng: &mut R) -> BigRational {
    let d = rng.gen_range(2..=7);
    q(rng.gen_range(1..d), d)
}

/// A few facts over `A/1` and `E/2` with atoms from 1..=3.
pub fn random_facts<R: Rng>(rng: &mut R, n: usize) -> Vec<Fact> {
    let mut all: Vec<Fact> = (1..=3).map(|a| Fact::ints("A", &[a])).collect();
    for a in 1..=3 {
        for b in 1..=3 {
            all.push(Fact::ints("E", &[a, b]));
        }
    }
    all.shuffle(rng);
    all.truncate(n);
    all
}

const VARS: [&str; 3] = ["x", "y", "z"];

fn random_term<R: Rng>(rng: &mut R, scope: &[&'static str]) -> Term {
    if !scope.is_empty() && rng.gen_bool(0.85) {
        Term::var(*scope.choose(rng).unwrap())
    } else {
        Term::Const(Atom::Int(rng.gen_range(1..=3)))
    }
}

fn random_atom<R: Rng>(rng: &mut R, scope: &[&'static str], with_eq: bool) -> Formula {
    match rng.gen_range(0..if with_eq { 5 } else { 4 }) {
        0 | 1 => Formula::rel("E", vec![random_term(rng, scope), random_term(rng, scope)]),
        2 | 3 => Formula::rel("A", vec![random_term(rng, scope)]),
        _ => Formula::eq(random_term(rng, scope), random_term(rng, scope)),
    }
}

/// Random FO formula of depth ≤ `depth` whose free variables lie in `scope`.
pub fn random_fo<R: Rng>(rng: &mut R, depth: usize, scope: &[&'static str]) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return random_atom(rng, scope, true);
    }
    match rng.gen_range(0..5) {
        0 => Formula::not(random_fo(rng, depth - 1, scope)),
        1 => Formula::and(random_fo(rng, depth - 1, scope), random_fo(rng, depth - 1, scope)),
        2 => Formula::or(random_fo(rng, depth - 1, scope), random_fo(rng, depth - 1, scope)),
        k => {
            let v = VARS[rng.gen_range(0..VARS.len())];
            let mut inner: Vec<&'static str> = scope.to_vec();
            if !inner.contains(&v) {
                inner.push(v);
            }
            let body = random_fo(rng, depth - 1, &inner);
            if k == 3 {
                Formula::exists(v, body)
            } else {
                Formula::forall(v, body)
            }
        }
    }
}

/// Random UCQ (atoms, `∧`, `∨`, `∃`).
pub fn random_ucq<R: Rng>(rng: &mut R, depth: usize, scope: &[&'static str]) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_atom(rng, scope, false);
    }
    match rng.gen_range(0..3) {
        0 => Formula::and(random_ucq(rng, depth - 1, scope), random_ucq(rng, depth - 1, scope)),
        1 => Formula::or(random_ucq(rng, depth - 1, scope), random_ucq(rng, depth - 1, scope)),
        _ => {
            let v = VARS[rng.gen_range(0..VARS.len())];
            let mut inner: Vec<&'static str> = scope.to_vec();
            if !inner.contains(&v) {
                inner.push(v);
            }
            Formula::exists(v, random_ucq(rng, depth - 1, &inner))
        }
    }
}

/// Single-query view `Q(free vars) := f`.
pub fn view_of(f: Formula) -> View {
    let head: Vec<String> = f.free_variables().into_iter().collect();
    View::single("Q", Query::with_vars(head, f).unwrap())
}

/// Existential closure.
pub fn close(f: Formula) -> Formula {
    let fv: Vec<String> = f.free_variables().into_iter().collect();
    Formula::exists_many(fv, f)
}

pub fn prob(r: &BigRational) -> Prob {
    Prob::new(r.clone()).unwrap()
}

/// The schema `{A/1, E/2}` used by the random generators.
pub fn ae_schema() -> Schema {
    Schema::new([("A".to_string(), 1), ("E".to_string(), 2)]).unwrap()
}

/// Finite TI over [`ae_schema`].
pub fn ae_ti(facts: &[(Fact, BigRational)]) -> TiPdb {
    TiPdb::explicit(ae_schema(), facts.iter().map(|(f, p)| (f.clone(), prob(p)))).unwrap()
}

/// Textbook evaluation by assignment over `adom(D) ∪ consts(f)`.
pub fn naive_holds(f: &Formula, inst: &Instance, dom: &[Atom], env: &mut BTreeMap<String, Atom>) -> bool {
    let val = |t: &Term, env: &BTreeMap<String, Atom>| match t {
        Term::Var(v) => env[v].clone(),
        Term::Const(a) => a.clone(),
    };
    match f {
        Formula::Rel(r, ts) => inst.contains(&Fact::new(r.clone(), ts.iter().map(|t| val(t, env)).collect())),
        Formula::Eq(a, b) => val(a, env) == val(b, env),
        Formula::Not(g) => !naive_holds(g, inst, dom, env),
        Formula::And(a, b) => naive_holds(a, inst, dom, env) && naive_holds(b, inst, dom, env),
        Formula::Or(a, b) => naive_holds(a, inst, dom, env) || naive_holds(b, inst, dom, env),
        Formula::Exists(x, g) | Formula::Forall(x, g) => {
            let exists = matches!(f, Formula::Exists(..));
            let saved = env.get(x).cloned();
            let mut out = !exists;
            for a in dom {
                env.insert(x.clone(), a.clone());
                if naive_holds(g, inst, dom, env) == exists {
                    out = exists;
                    break;
                }
            }
            match saved {
                Some(a) => env.insert(x.clone(), a),
                None => env.remove(x),
            };
            out
        }
    }
}

/// All head tuples over the domain satisfying the body.
pub fn naive_answers(vars: &[String], body: &Formula, inst: &Instance) -> Vec<Vec<Atom>> {
    let mut dom = inst.adom();
    dom.extend(body.constants());
    let dom: Vec<Atom> = dom.into_iter().collect();
    let mut out = Vec::new();
    let mut tuple = vec![0usize; vars.len()];
    if !vars.is_empty() && dom.is_empty() {
        return out;
    }
    loop {
        let mut env: BTreeMap<String, Atom> =
            vars.iter().zip(&tuple).map(|(v, &i)| (v.clone(), dom[i].clone())).collect();
        if naive_holds(body, inst, &dom, &mut env) {
            out.push(tuple.iter().map(|&i| dom[i].clone()).collect());
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == vars.len() {
                out.sort();
                out.dedup();
                return out;
            }
            tuple[pos] += 1;
            if tuple[pos] < dom.len() {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}
