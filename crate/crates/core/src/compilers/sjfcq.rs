//! Monotone (UCQ) views over a finite TI rewritten as a single self-join-free
//! CQ over a fresh TI: one unary selector relation per base fact and one
//! certain relation listing the view image of every sub-instance.

use num::BigRational;

use super::representation::{var_terms, vars, CompileError, Representation};
use crate::probspace::{ti_new, FactFamily, Marginal, Prob, TiPdb, ENUMERATION_GUARD_BITS};
use crate::relmodel::{classify_view, PreparedView, Atom, Fact, Formula, Fragment, Instance, Query, Schema, Term, View};

/// `S_i(0)` (certain) and `S_i(1)` (with the marginal of the `i`-th
/// uncertain base fact), plus `S(b̄, ȳ)` for every `b̄ ∈ {0,1}^n` and
/// `ȳ ∈ V(D_b̄)`, where `D_b̄` holds the certain facts and the uncertain
/// ones selected by `b̄`. The view
/// `∃x̄ S₁(x₁) ∧ … ∧ S_n(x_n) ∧ S(x̄, ȳ)` then yields `V(D)` by monotonicity.
pub fn monotone_to_sjfcq(base: &TiPdb, view: &View) -> Result<Representation, CompileError> {
    if !base.is_finite() {
        return Err(CompileError::NotFinite);
    }
    let frag = classify_view(view);
    if frag > Fragment::UCQ {
        return Err(CompileError::NotMonotone(frag));
    }
    view.check_input(&base.schema, true)?;
    let all = base.exact_facts()?;
    let always: Vec<Fact> = all.iter().filter(|(_, p)| p.is_one()).map(|(f, _)| f.clone()).collect();
    let facts: Vec<(Fact, Prob)> = all.into_iter().filter(|(_, p)| !p.is_zero() && !p.is_one()).collect();
    let n = facts.len();
    if n as u32 > ENUMERATION_GUARD_BITS {
        return Err(crate::probspace::PdbError::WindowTooLarge {
            bits: n as u32,
            guard: ENUMERATION_GUARD_BITS,
        }
        .into());
    }
    let selectors: Vec<String> = (1..=n).map(|i| format!("S{i}")).collect();
    let outputs: Vec<(String, String, usize)> = view
        .queries()
        .map(|(r, q)| {
            let s = if view.len() == 1 { "S".to_string() } else { format!("S_{r}") };
            (r.to_string(), s, q.arity())
        })
        .collect();

    let mut new_facts: Vec<(Fact, Marginal)> = Vec::new();
    for (sel, (_, p)) in selectors.iter().zip(&facts) {
        new_facts.push((Fact::new(sel.clone(), vec![Atom::Int(0)]), Prob::one().into()));
        new_facts.push((Fact::new(sel.clone(), vec![Atom::Int(1)]), p.clone().into()));
    }
    let prepared = PreparedView::new(view)?;
    for mask in 0u64..(1u64 << n) {
        let bits: Vec<Atom> = (0..n).map(|i| Atom::Int((mask >> i & 1) as i64)).collect();
        let sub = Instance::new(
            always
                .iter()
                .cloned()
                .chain((0..n).filter(|i| mask >> i & 1 == 1).map(|i| facts[i].0.clone())),
        );
        let image = prepared.apply(&sub)?;
        for (r, s, _) in &outputs {
            for f in image.relation(r) {
                let mut args = bits.clone();
                args.extend(f.args.iter().cloned());
                new_facts.push((Fact::new(s.clone(), args), Prob::one().into()));
            }
        }
    }
    let schema = Schema::new(
        selectors
            .iter()
            .map(|s| (s.clone(), 1))
            .chain(outputs.iter().map(|(_, s, a)| (s.clone(), n + a))),
    )?;
    let new_base = ti_new(schema, FactFamily::Explicit(new_facts))?;

    let xs = vars("x", n);
    let new_view = View::new(outputs.iter().map(|(r, s, a)| {
        let ys = vars("y", *a);
        let mut parts: Vec<Formula> = selectors
            .iter()
            .zip(&xs)
            .map(|(sel, x)| Formula::rel(sel.clone(), vec![Term::var(x.clone())]))
            .collect();
        let mut ts = var_terms(&xs);
        ts.extend(var_terms(&ys));
        parts.push(Formula::rel(s.clone(), ts));
        let body = Formula::exists_many(xs.clone(), Formula::conj(parts));
        (r.clone(), Query::with_vars(ys, body).expect("head covers free variables"))
    }));
    Representation::new(new_base, None, new_view)
}

/// Marginal of a selector fact `S_i(1)` (used by reports).
pub fn selector_marginal(rep: &Representation, i: usize) -> Option<BigRational> {
    rep.base
        .facts()
        .iter()
        .find(|(f, _)| f.rel == format!("S{i}") && f.args == [Atom::Int(1)])
        .and_then(|(_, m)| m.as_exact().map(|p| p.value().clone()))
}
