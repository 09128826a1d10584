//! Removing an FO condition from a finite TI: `k` independent copies of the
//! base, a flag fact `R_⊥(⊥)`, and a view that picks the first copy
//! satisfying `ψ = φ ∧ ¬φ₀` (falling back to a fixed world `I₀`).

use std::collections::BTreeSet;

use num::{BigRational, One};

use super::representation::{fresh_relation, tuple_eq, var_terms, vars, CompileError, Representation};
use crate::probspace::{
    condition_distribution, enumerate_worlds, ti_new, FactFamily, Marginal, Pdb, Prob, TiPdb, Truncation,
    ENUMERATION_GUARD_BITS,
};
use crate::relmodel::{
    relativize_to_copy, to_existential_form, PreparedQuery, Atom, CopyNaming, Fact, Formula, Instance, Query, Schema,
    Term, View,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionEliminationReport {
    pub i0: Instance,
    pub p_phi: Prob,
    pub p_0: Prob,
    pub p_psi: Prob,
    pub k: usize,
    pub p_rep: Prob,
    pub p_bot: Prob,
}

/// Which case of the construction applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Elimination {
    /// The condition holds almost surely; the base is returned as is.
    AlwaysTrue,
    /// Only one world survives; it becomes a deterministic TI.
    SingleWorld(Instance),
    General(Box<ConditionEliminationReport>),
}

/// `φ₀`: holds exactly in `I₀` (over `schema`).
pub fn characteristic_sentence(i0: &Instance, schema: &Schema) -> Formula {
    Formula::conj(schema.relations().map(|(r, a)| {
        let xs = vars("x", a);
        let atom = Formula::rel(r, var_terms(&xs));
        let members = Formula::disj(i0.relation(r).iter().map(|f| tuple_eq(&xs, &f.args)));
        Formula::forall_many(xs, Formula::iff(atom, members))
    }))
}

fn check_constants(f: &Formula) -> Result<(), CompileError> {
    match f.constants().into_iter().find(Atom::is_reserved) {
        Some(a) => Err(CompileError::ReservedAtom(a.to_string())),
        None => Ok(()),
    }
}

/// Representation without condition of `base | condition`.
///
/// `I₀` is the most likely surviving world (ties: canonical order) and `k`
/// the least number of copies with `(1−p_ψ)^k < p₀`.
pub fn eliminate_condition(base: &TiPdb, condition: &Formula) -> Result<(Representation, Elimination), CompileError> {
    if !base.is_finite() {
        return Err(CompileError::NotFinite);
    }
    if !condition.is_sentence() {
        return Err(CompileError::NotASentence);
    }
    check_constants(condition)?;
    condition.check_schema(&base.schema)?;
    let facts = base.exact_facts()?;
    let dist = enumerate_worlds(&Pdb::Ti(base.clone()), Truncation::Full)?;
    let prepared = PreparedQuery::sentence(condition)?;
    let p_phi = dist.mass_where(|w| prepared.holds(w).unwrap_or(false));
    let p_phi = Prob::new(p_phi.as_rational().expect("TI world masses are rational").clone())?;
    let identity = View::identity(&base.schema);
    if p_phi.is_zero() {
        return Err(crate::probspace::CondError::NullEvent.into());
    }
    if p_phi.is_one() {
        return Ok((Representation::new(base.clone(), None, identity)?, Elimination::AlwaysTrue));
    }
    let conditioned = condition_distribution(&dist, condition)?;
    let (i0, p_0) = conditioned
        .iter()
        .map(|(w, m)| (w, m.as_rational().expect("rational").clone()))
        .fold(None::<(&Instance, BigRational)>, |best, (w, p)| match best {
            Some((bw, bp)) if bp >= p => Some((bw, bp)),
            _ => Some((w, p)),
        })
        .expect("conditioned law is non-empty");
    let i0 = i0.clone();
    if p_0.is_one() {
        let det = ti_new(base.schema.clone(), FactFamily::explicit(i0.iter().map(|f| (f.clone(), Prob::one()))))?;
        return Ok((Representation::new(det, None, identity)?, Elimination::SingleWorld(i0)));
    }

    let phi0 = characteristic_sentence(&i0, &base.schema);
    let p_psi = (BigRational::one() - &p_0) * p_phi.value();
    let miss = BigRational::one() - &p_psi;
    let mut k = 1usize;
    let mut miss_k = miss.clone();
    while miss_k >= p_0 {
        miss_k *= &miss;
        k += 1;
    }
    let uncertain = facts.iter().filter(|(_, p)| !p.is_zero() && !p.is_one()).count();
    if k * uncertain + 1 > ENUMERATION_GUARD_BITS as usize {
        return Err(CompileError::CopyBudget {
            copies: k,
            facts: uncertain,
            guard: ENUMERATION_GUARD_BITS,
        });
    }
    let p_rep = BigRational::one() - &miss_k;
    let p_bot = (&p_rep - (BigRational::one() - &p_0)) / &p_rep;

    let naming = CopyNaming::fresh(&base.schema, &base.schema);
    let mut taken: BTreeSet<String> = base.schema.relations().map(|(r, _)| r.to_string()).collect();
    taken.extend(naming.iter().map(|(_, c, _)| c.to_string()));
    let bot_rel = fresh_relation("Bot", &mut taken);

    let mut new_facts: Vec<(Fact, Marginal)> = Vec::new();
    for i in 1..=k as u32 {
        for (f, p) in &facts {
            let mut args = vec![Atom::CopyIdx(i)];
            args.extend(f.args.iter().cloned());
            new_facts.push((Fact::new(naming.copy_of(&f.rel).expect("copied"), args), p.clone().into()));
        }
    }
    new_facts.push((Fact::new(bot_rel.clone(), vec![Atom::Bot]), Prob::new(p_bot.clone())?.into()));
    let schema = naming.copied_schema().merge(&Schema::new([(bot_rel.clone(), 1)])?)?;
    let new_base = ti_new(schema, FactFamily::Explicit(new_facts))?;

    // φ and ¬φ₀ are relativized separately: under active-domain semantics the
    // constants of φ₀ must not widen the quantifier range of φ.
    let phi_e = to_existential_form(condition);
    let not_phi0_e = to_existential_form(&Formula::not(phi0));
    let psis: Vec<Formula> = (1..=k as u32)
        .map(|i| {
            Ok::<_, CompileError>(Formula::and(
                relativize_to_copy(&phi_e, i, k as u32, &naming)?,
                relativize_to_copy(&not_phi0_e, i, k as u32, &naming)?,
            ))
        })
        .collect::<Result<_, _>>()?;
    let flag = Formula::rel(bot_rel, vec![Term::Const(Atom::Bot)]);
    let fallback = Formula::or(flag.clone(), Formula::conj(psis.iter().cloned().map(Formula::not)));
    let view = View::new(base.schema.relations().map(|(r, a)| {
        let xs = vars("x", a);
        let from_i0 = Formula::and(
            fallback.clone(),
            Formula::disj(i0.relation(r).iter().map(|f| tuple_eq(&xs, &f.args))),
        );
        let from_copy = Formula::disj((1..=k).map(|istar| {
            let mut ts = vec![Term::Const(Atom::CopyIdx(istar as u32))];
            ts.extend(var_terms(&xs));
            let mut parts = vec![Formula::not(flag.clone()), psis[istar - 1].clone()];
            parts.extend(psis[..istar - 1].iter().cloned().map(Formula::not));
            parts.push(Formula::rel(naming.copy_of(r).expect("copied"), ts));
            Formula::conj(parts)
        }));
        let q = Query::with_vars(xs, Formula::or(from_i0, from_copy)).expect("free variables are the head");
        (r.to_string(), q)
    }));

    let report = ConditionEliminationReport {
        i0,
        p_phi,
        p_0: Prob::new(p_0)?,
        p_psi: Prob::new(p_psi)?,
        k,
        p_rep: Prob::new(p_rep)?,
        p_bot: Prob::new(p_bot)?,
    };
    Ok((Representation::new(new_base, None, view)?, Elimination::General(Box::new(report))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compilers::verify_representation;
    use crate::relmodel::parse_formula;

    #[test]
    fn two_atoms_exists() {
        let base = TiPdb::from_facts([
            (Fact::ints("A", &[1]), Prob::ratio(1, 2)),
            (Fact::ints("A", &[2]), Prob::ratio(1, 2)),
        ])
        .unwrap();
        let phi = parse_formula("exists x: A(x)").unwrap();
        let (rep, elim) = eliminate_condition(&base, &phi).unwrap();
        let Elimination::General(r) = elim else { panic!("general branch expected") };
        assert_eq!(r.i0, Instance::new([Fact::ints("A", &[1])]));
        assert_eq!((r.k, r.p_bot.clone(), r.p_rep.clone()), (2, Prob::ratio(1, 9), Prob::ratio(3, 4)));
        assert_eq!(rep.base.facts().len(), 5);
        let target = condition_distribution(&enumerate_worlds(&Pdb::Ti(base), Truncation::Full).unwrap(), &phi).unwrap();
        assert!(verify_representation(&target, &rep, Truncation::Full).unwrap().is_equal());
    }

    #[test]
    fn domain_dependent_condition() {
        // True iff the world is non-empty; I₀'s constants must not make it
        // true on an empty copy.
        let base = TiPdb::from_facts([
            (Fact::ints("A", &[1]), Prob::ratio(1, 2)),
            (Fact::ints("A", &[2]), Prob::ratio(1, 3)),
        ])
        .unwrap();
        let phi = parse_formula("exists x: forall y: y = y").unwrap();
        let (rep, _) = eliminate_condition(&base, &phi).unwrap();
        let target = condition_distribution(&enumerate_worlds(&Pdb::Ti(base), Truncation::Full).unwrap(), &phi).unwrap();
        assert!(verify_representation(&target, &rep, Truncation::Full).unwrap().is_equal());
    }

    #[test]
    fn shortcuts() {
        let base = TiPdb::from_facts([(Fact::ints("A", &[1]), Prob::ratio(1, 2))]).unwrap();
        let (_, e) = eliminate_condition(&base, &Formula::truth()).unwrap();
        assert_eq!(e, Elimination::AlwaysTrue);
        let (rep, e) = eliminate_condition(&base, &parse_formula("A(1)").unwrap()).unwrap();
        assert!(matches!(e, Elimination::SingleWorld(_)));
        assert!(rep.base.facts().iter().all(|(_, m)| m.is_one()));
        assert!(eliminate_condition(&base, &Formula::falsity()).is_err());
    }
}
