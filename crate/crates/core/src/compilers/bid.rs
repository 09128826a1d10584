//! BID → conditioned TI: tag every fact with its block, condition on the
//! block structure, project the tag away.

use std::collections::BTreeSet;

use num::{BigRational, One};

use super::condition::{eliminate_condition, Elimination};
use super::representation::{compose_views, fresh_relation, var_terms, vars, CompileError, Representation};
use crate::probspace::{BidPdb, FactFamily, Prob, TiPdb};
use crate::relmodel::{Atom, Fact, Formula, Query, Schema, Term, View};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCompilation {
    pub residual: Prob,
    /// `(fact, p, q)` per fact of the block.
    pub facts: Vec<(Fact, Prob, Prob)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidCompilationReport {
    pub blocks: Vec<BlockCompilation>,
}

/// `q = p/(1+p)` for a block without residual mass, `p/(r+p)` otherwise.
pub fn block_q(p: &Prob, residual: &Prob) -> Prob {
    let denom = if residual.is_zero() {
        BigRational::one() + p.value()
    } else {
        residual.value() + p.value()
    };
    Prob::new(p.value() / denom).expect("q lies in [0,1)")
}

fn tagged(f: &Fact, copy: &str, block: usize) -> Fact {
    let mut args = f.args.clone();
    args.push(Atom::Int(block as i64));
    Fact::new(copy, args)
}

/// Conditional representation of a finite BID: facts `R′(ā, i)` carry their
/// block number `i` (from 1); the condition admits at most one fact per
/// block and exactly one in blocks without residual mass.
pub fn compile_bid(bid: &BidPdb) -> Result<(Representation, BidCompilationReport), CompileError> {
    if bid.blocks().is_empty() {
        return Err(CompileError::EmptyBlocks);
    }
    let mut taken: BTreeSet<String> = bid.schema.relations().map(|(r, _)| r.to_string()).collect();
    let copies: Vec<(String, String, usize)> = bid
        .schema
        .relations()
        .map(|(r, a)| (r.to_string(), fresh_relation(&format!("{r}'"), &mut taken), a))
        .collect();
    let copy_of = |r: &str| copies.iter().find(|(b, _, _)| b == r).map(|(_, c, _)| c.as_str()).expect("schema relation");

    let mut facts = Vec::new();
    let mut report = Vec::new();
    for (i, (block, r)) in bid.blocks().iter().zip(bid.residuals()).enumerate() {
        let mut rows = Vec::new();
        for (f, p) in block {
            let q = block_q(p, r);
            facts.push((tagged(f, copy_of(&f.rel), i + 1), q.clone()));
            rows.push((f.clone(), p.clone(), q));
        }
        report.push(BlockCompilation { residual: r.clone(), facts: rows });
    }

    // Two distinct facts sharing a block tag z.
    let z = Term::var("z");
    let mut clashes = Vec::new();
    for (n1, (_, c1, a1)) in copies.iter().enumerate() {
        for (_, c2, a2) in &copies[n1..] {
            let xs = vars("x", *a1);
            let ys = vars("y", *a2);
            let mut t1 = var_terms(&xs);
            t1.push(z.clone());
            let mut t2 = var_terms(&ys);
            t2.push(z.clone());
            let mut parts = vec![Formula::rel(c1.clone(), t1), Formula::rel(c2.clone(), t2)];
            if c1 == c2 {
                if *a1 == 0 {
                    continue;
                }
                parts.push(Formula::disj(
                    xs.iter().zip(&ys).map(|(x, y)| Formula::neq(Term::var(x.clone()), Term::var(y.clone()))),
                ));
            }
            let all: Vec<String> = xs.into_iter().chain(ys).collect();
            clashes.push(Formula::exists_many(all, Formula::conj(parts)));
        }
    }
    let mut condition = vec![Formula::not(Formula::exists("z", Formula::disj(clashes)))];
    for (i, (block, r)) in bid.blocks().iter().zip(bid.residuals()).enumerate() {
        if !r.is_zero() {
            continue;
        }
        let rels: BTreeSet<&str> = block.iter().map(|(f, _)| f.rel.as_str()).collect();
        condition.push(Formula::disj(rels.into_iter().map(|rel| {
            let (_, c, a) = copies.iter().find(|(b, _, _)| b == rel).expect("schema relation");
            let xs = vars("x", *a);
            let mut ts = var_terms(&xs);
            ts.push(Term::Const(Atom::Int(i as i64 + 1)));
            Formula::exists_many(xs, Formula::rel(c.clone(), ts))
        })));
    }

    let view = View::new(copies.iter().map(|(r, c, a)| {
        let xs = vars("x", *a);
        let mut ts = var_terms(&xs);
        ts.push(Term::var("z"));
        let body = Formula::exists("z", Formula::rel(c.clone(), ts));
        (r.clone(), Query::with_vars(xs, body).expect("projection is well formed"))
    }));
    let schema = Schema::new(copies.iter().map(|(_, c, a)| (c.clone(), a + 1)))?;
    let base = crate::probspace::ti_new(schema, FactFamily::explicit(facts))?;
    let rep = Representation::new(base, Some(Formula::conj(condition)), view)?;
    Ok((rep, BidCompilationReport { blocks: report }))
}

/// Unconditioned representation of a finite BID: [`compile_bid`] followed by
/// condition elimination, with the two views composed.
pub fn compile_bid_to_ti(
    bid: &BidPdb,
) -> Result<(Representation, BidCompilationReport, Elimination), CompileError> {
    let (cond, report) = compile_bid(bid)?;
    let condition = cond.condition.clone().expect("compile_bid always conditions");
    let (inner, elim) = eliminate_condition(&cond.base, &condition)?;
    let view = compose_views(&cond.view, &inner.view)?;
    let rep = Representation::new(inner.base, None, view)?;
    Ok((rep, report, elim))
}

/// The BID as a TI if all blocks are singletons (no compilation needed).
pub fn bid_as_ti(bid: &BidPdb) -> Option<TiPdb> {
    if bid.blocks().iter().any(|b| b.len() > 1) {
        return None;
    }
    crate::probspace::ti_new(bid.schema.clone(), FactFamily::explicit(bid.blocks().iter().flatten().cloned())).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::{enumerate_worlds, ratio, Mass, Pdb, Truncation};
    use crate::relmodel::Instance;

    #[test]
    fn exclusive_pair() {
        let f = Fact::ints("R", &[1]);
        let g = Fact::ints("R", &[2]);
        let bid = BidPdb::from_blocks(vec![vec![(f.clone(), Prob::ratio(1, 2)), (g.clone(), Prob::ratio(1, 2))]]).unwrap();
        let (rep, report) = compile_bid(&bid).unwrap();
        assert!(report.blocks[0].facts.iter().all(|(_, _, q)| *q == Prob::ratio(1, 3)));
        let law = rep.law(Truncation::Full).unwrap();
        assert_eq!(law.len(), 2);
        assert_eq!(law.get(&Instance::new([f])), Mass::from(ratio(1, 2)));
        assert_eq!(law.get(&Instance::new([g])), Mass::from(ratio(1, 2)));
    }

    #[test]
    fn residual_block() {
        let f = Fact::ints("R", &[1]);
        let bid = BidPdb::from_blocks(vec![vec![(f.clone(), Prob::ratio(1, 3))]]).unwrap();
        let (rep, report) = compile_bid(&bid).unwrap();
        assert_eq!(report.blocks[0].facts[0].2, Prob::ratio(1, 3));
        let law = rep.law(Truncation::Full).unwrap();
        assert_eq!(law, enumerate_worlds(&Pdb::Bid(bid), Truncation::Full).unwrap());
    }
}
