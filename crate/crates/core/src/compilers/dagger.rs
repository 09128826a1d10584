//! Segmentation encoding of an explicit PDB as a conditioned TI, and the
//! checker for the summability condition `∑ |D|·P(D)^{c/|D|} < ∞` it needs.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;

use num::{BigInt, BigRational, One, ToPrimitive};

use super::representation::{fresh_relation, var_terms, vars, CompileError, Representation};
use crate::probspace::{
    infer_schema, ti_new, Distribution, FactFamily, Marginal, ParamKind, PowProb, Prob,
    WorldFamily,
};
use crate::relmodel::{Atom, Fact, Formula, Instance, Query, Schema, Term, View};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentEntry {
    /// Instance identifier (0 is reserved for the empty instance).
    pub id: u64,
    pub instance: Instance,
    pub p: Prob,
    /// `ŝ = max(⌈|D|/c⌉, 1)`.
    pub segments: usize,
    /// `(p/(1+p))^{1/ŝ}`.
    pub q: PowProb,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationReport {
    pub c: usize,
    pub relation: String,
    /// Whether slots carry a relation-name tag (schemas other than a single
    /// relation of positive arity).
    pub tagged: bool,
    pub instances: Vec<SegmentEntry>,
}

struct Layout {
    rel: String,
    c: usize,
    tagged: bool,
    width: usize,
}

impl Layout {
    fn arity(&self) -> usize {
        3 + self.c * self.width
    }

    fn slot(&self, f: Option<&Fact>) -> Vec<Atom> {
        let mut out = Vec::with_capacity(self.width);
        if let Some(f) = f {
            if self.tagged {
                out.push(Atom::str(f.rel.clone()));
            }
            out.extend(f.args.iter().cloned());
        }
        out.resize(self.width, Atom::Bot);
        out
    }

    /// `Complete(i)`: segment 0 of instance `i` is present and every present
    /// segment's successor is present.
    fn complete(&self, i: &str) -> Formula {
        let seg = |id: Term, j: Term, n: Term, rest: &[String]| {
            let mut ts = vec![id, j, n];
            ts.extend(var_terms(rest));
            Formula::rel(self.rel.clone(), ts)
        };
        let iv = Term::var(i);
        let slots = |tag: &str| vars(&format!("{i}_{tag}"), self.c * self.width);
        let head_n = format!("{i}_n");
        let first = Formula::exists_many(
            std::iter::once(head_n.clone()).chain(slots("a")),
            seg(iv.clone(), Term::Const(Atom::Int(0)), Term::var(head_n.clone()), &slots("a")),
        );
        let (j, n, m) = (format!("{i}_j"), format!("{i}_next"), format!("{i}_m"));
        let successor = Formula::exists_many(
            std::iter::once(m.clone()).chain(slots("c")),
            seg(iv.clone(), Term::var(n.clone()), Term::var(m), &slots("c")),
        );
        let broken = Formula::exists_many(
            [j.clone(), n.clone()].into_iter().chain(slots("b")),
            Formula::conj([
                seg(iv, Term::var(j), Term::var(n.clone()), &slots("b")),
                Formula::neq(Term::var(n), Term::Const(Atom::Bot)),
                Formula::not(successor),
            ]),
        );
        Formula::and(first, Formula::not(broken))
    }
}

/// Encodes every world as a chain of `R̂(i, j, N_{i,j}, slot₁, …, slot_c)`
/// facts; conditioning on "exactly one chain is complete" and reading the
/// complete chain back reproduces `pdb` exactly.
pub fn dagger_compile(pdb: &Distribution, c: usize) -> Result<(Representation, SegmentationReport), CompileError> {
    if c == 0 {
        return Err(CompileError::ZeroSegment);
    }
    let worlds: Vec<(&Instance, Prob)> = pdb
        .iter()
        .map(|(w, m)| {
            let r = m.as_rational().ok_or(crate::probspace::PdbError::NonRational)?;
            Ok((w, Prob::new(r.clone())?))
        })
        .collect::<Result<_, CompileError>>()?;
    if let Some((w, _)) = worlds.iter().find(|(_, p)| p.is_zero()) {
        return Err(CompileError::ZeroProbability(w.to_string()));
    }
    let schema = infer_schema(worlds.iter().flat_map(|(w, _)| w.iter()))?;
    let rels: Vec<(String, usize)> = schema.relations().map(|(r, a)| (r.to_string(), a)).collect();
    let tagged = !(rels.len() == 1 && rels[0].1 > 0);
    let r = schema.r_max();
    let mut taken: BTreeSet<String> = rels.iter().map(|(r, _)| r.clone()).collect();
    let layout = Layout {
        rel: fresh_relation("Seg", &mut taken),
        c,
        tagged,
        width: r + tagged as usize,
    };

    let mut next_id = 1u64;
    let mut facts: Vec<(Fact, Marginal)> = Vec::new();
    let mut entries = Vec::new();
    for (w, p) in worlds {
        let id = if w.is_empty() {
            0
        } else {
            next_id += 1;
            next_id - 1
        };
        let s = w.len();
        let segments = s.div_ceil(c).max(1);
        let base = Prob::new(p.value() / (BigRational::one() + p.value()))?;
        let q = PowProb::root(base, segments as u32);
        for j in 0..segments {
            let next = if (j + 1) * c < s { Atom::Int(j as i64 + 1) } else { Atom::Bot };
            let mut args = vec![Atom::Int(id as i64), Atom::Int(j as i64), next];
            for k in 0..c {
                args.extend(layout.slot(w.facts().get(j * c + k)));
            }
            facts.push((Fact::new(layout.rel.clone(), args), Marginal::power(q.clone())));
        }
        entries.push(SegmentEntry {
            id,
            instance: w.clone(),
            p,
            segments,
            q,
        });
    }
    entries.sort_by_key(|e| e.id);

    let condition = Formula::and(
        Formula::exists("i", layout.complete("i")),
        Formula::not(Formula::exists_many(
            ["i", "k"],
            Formula::conj([
                layout.complete("i"),
                layout.complete("k"),
                Formula::neq(Term::var("i"), Term::var("k")),
            ]),
        )),
    );
    let view = View::new(rels.iter().map(|(rel, a)| {
        let xs = vars("x", *a);
        let readers = (0..c).map(|s| {
            let mut ts = vec![Term::var("i"), Term::var("j"), Term::var("n")];
            let mut bound = vec!["j".to_string(), "n".to_string()];
            for k in 0..c {
                if k == s {
                    if tagged {
                        ts.push(Term::Const(Atom::str(rel.clone())));
                    }
                    ts.extend(var_terms(&xs));
                    ts.extend(std::iter::repeat_n(Term::Const(Atom::Bot), r - a));
                } else {
                    let other = vars(&format!("o{k}_"), layout.width);
                    ts.extend(var_terms(&other));
                    bound.extend(other);
                }
            }
            Formula::exists_many(bound, Formula::rel(layout.rel.clone(), ts))
        });
        let mut body = Formula::exists("i", Formula::and(layout.complete("i"), Formula::disj(readers)));
        if !tagged {
            body = Formula::and(body, Formula::neq(Term::var("x0"), Term::Const(Atom::Bot)));
        }
        (rel.clone(), Query::with_vars(xs, body).expect("head covers free variables"))
    }));
    let base = ti_new(Schema::new([(layout.rel.clone(), layout.arity())])?, FactFamily::Explicit(facts))?;
    let rep = Representation::new(base, Some(condition), view)?;
    Ok((
        rep,
        SegmentationReport {
            c,
            relation: layout.rel,
            tagged,
            instances: entries,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DaggerVerdict {
    Holds,
    Diverges,
    Unknown,
}

/// PDBs the checker understands.
#[derive(Clone, Copy, Debug)]
pub enum DaggerInput<'a> {
    Explicit(&'a Distribution),
    /// TI-PDB with a cataloged marginal sequence.
    Ti(&'a ParamKind),
    Worlds(WorldFamily),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DaggerReport {
    pub verdict: DaggerVerdict,
    pub c: usize,
    /// Number of worlds (or TI facts) the partial sums range over.
    pub horizon: usize,
    /// Partial sum of `|D|·P(D)^{c/|D|}` over non-empty worlds.
    pub dagger_partial: f64,
    /// Partial sum of `⌈|D|/c⌉·P(D)^{1/⌈|D|/c⌉}`.
    pub ddagger_partial: f64,
    pub certificate: Option<String>,
}

fn ln_int(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        n.to_f64().unwrap_or(f64::MAX).ln()
    } else {
        let shift = bits - 64;
        (n >> shift).to_f64().unwrap_or(f64::MAX).ln() + shift as f64 * LN_2
    }
}

fn ln_rational(r: &BigRational) -> f64 {
    ln_int(r.numer()) - ln_int(r.denom())
}

/// `(†)` and `(‡)` terms of a world with `size` facts and `ln P`.
fn terms(size: f64, ln_p: f64, c: usize) -> (f64, f64) {
    if size == 0.0 {
        return (0.0, 0.0);
    }
    let segs = (size / c as f64).ceil();
    (size * (ln_p * c as f64 / size).exp(), segs * (ln_p / segs).exp())
}

/// Truncated window enumeration is capped at this many TI facts.
const TI_PARTIAL_CAP: usize = 16;

/// Evaluates the partial sums of the summability condition for `c` and
/// returns `Holds`/`Diverges` only with a closed-form certificate.
pub fn dagger_check(input: DaggerInput<'_>, c: usize, horizon: usize) -> DaggerReport {
    assert!(c > 0, "c must be positive");
    let mut report = DaggerReport {
        verdict: DaggerVerdict::Unknown,
        c,
        horizon: 0,
        dagger_partial: 0.0,
        ddagger_partial: 0.0,
        certificate: None,
    };
    let mut add = |size: f64, ln_p: f64| {
        let (a, b) = terms(size, ln_p, c);
        report.dagger_partial += a;
        report.ddagger_partial += b;
    };
    match input {
        DaggerInput::Explicit(d) => {
            for (w, m) in d.iter() {
                add(w.len() as f64, m.to_f64().ln());
            }
            report.horizon = d.len();
            report.verdict = DaggerVerdict::Holds;
            report.certificate = Some("finitely many worlds: the sum is finite".into());
        }
        DaggerInput::Worlds(fam) => {
            for (s, p) in fam.terms(horizon) {
                add(s.to_f64().unwrap_or(f64::MAX), ln_rational(&p));
            }
            report.horizon = horizon;
            let (verdict, cert) = match fam {
                WorldFamily::SquareExponential => (
                    DaggerVerdict::Holds,
                    format!("for i ≥ {c}: i·P_i^({c}/i) ≤ (1/Z)·i·2^(−{c}i), a convergent series"),
                ),
                WorldFamily::DoublingSizes => {
                    let i0 = (1..).find(|&i: &u32| 2 * i as u64 * c as u64 <= 1u64 << i.min(63)).expect("exists");
                    (
                        DaggerVerdict::Diverges,
                        format!("for i ≥ {i0}: 2·i·c ≤ 2^i, so P_i^(c/2^i) ≥ 1/2 and the i-th term is ≥ 2^(i−1)"),
                    )
                }
            };
            report.verdict = verdict;
            report.certificate = Some(cert);
        }
        DaggerInput::Ti(kind) => {
            let m = horizon.min(TI_PARTIAL_CAP);
            let ps: Vec<f64> = (1..=m as u64).map(|i| kind.p(i).to_f64()).collect();
            for mask in 1u64..(1 << m) {
                let mut ln_p = 0.0;
                for (b, p) in ps.iter().enumerate() {
                    ln_p += if mask >> b & 1 == 1 { p.ln() } else { (1.0 - p).ln() };
                }
                add(mask.count_ones() as f64, ln_p);
            }
            report.horizon = m;
            if let Some(cert) = ti_divergence(kind, c) {
                report.verdict = DaggerVerdict::Diverges;
                report.certificate = Some(cert);
            }
        }
    }
    report
}

/// Lower-bound certificate: grouping the worlds by their largest fact index
/// `i` gives `2^{i−1}` worlds each contributing at least `(Z·p_i)^c`.
fn ti_divergence(kind: &ParamKind, c: usize) -> Option<String> {
    match kind {
        ParamKind::Geometric { ratio, .. } => {
            let two = BigRational::from_integer(BigInt::from(2));
            (two * num::pow(ratio.clone(), c) >= BigRational::one()).then(|| {
                format!("2·ratio^{c} ≥ 1: the i-th group contributes ≥ (Z·a)^{c}·(2·ratio^{c})^i/2, which does not vanish")
            })
        }
        ParamKind::InversePolynomial { c: c0, s, d } => {
            let sc = *s as usize * c;
            let i0 = (1u64..1 << 16).find(|&i| {
                let bi = BigInt::from(i);
                let ipow = num::pow(bi.clone(), sc);
                num::pow(&bi + 1, sc) <= &ipow * 2
                    && BigInt::one() << i >= ipow
                    && BigRational::from_integer(num::pow(bi, *s as usize)) >= *d
            })?;
            Some(format!(
                "for i ≥ {i0}: p_i ≥ {c0}/(2·i^{s}) and 2^i ≥ i^{sc}, so the worlds with largest fact index i contribute ≥ Z^{c}·({c0}/2)^{c}/2 > 0 each"
            ))
        }
    }
}

/// `(†)` term `|D|·P^{c/|D|}` in `f64`.
pub fn dagger_term(size: usize, p: &Prob, c: usize) -> f64 {
    terms(size as f64, ln_rational(p.value()), c).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compilers::verify_representation;
    use crate::probspace::{ratio, Truncation};

    fn r(i: i64) -> Fact {
        Fact::ints("R", &[i])
    }

    #[test]
    fn three_world_fixture() {
        let d = Distribution::explicit([
            (Instance::empty(), Prob::ratio(1, 2)),
            (Instance::new([r(1)]), Prob::ratio(1, 4)),
            (Instance::new([r(1), r(2)]), Prob::ratio(1, 4)),
        ])
        .unwrap();
        let (rep, report) = dagger_compile(&d, 1).unwrap();
        let qs: Vec<_> = report.instances.iter().map(|e| (e.id, e.segments)).collect();
        assert_eq!(qs, vec![(0, 1), (1, 1), (2, 2)]);
        assert_eq!(report.instances[0].q.to_prob(), Some(Prob::ratio(1, 3)));
        assert_eq!(report.instances[1].q.to_prob(), Some(Prob::ratio(1, 5)));
        assert_eq!(report.instances[2].q.powi(2).to_prob(), Some(Prob::ratio(1, 5)));
        let seg = &report.relation;
        let facts: Vec<String> = rep.base.facts().iter().map(|(f, _)| f.to_string()).collect();
        assert!(facts.contains(&format!("{seg}(2,0,1,1)")));
        assert!(facts.contains(&format!("{seg}(2,1,_bot,2)")));
        assert!(facts.contains(&format!("{seg}(0,0,_bot,_bot)")));
        assert!(verify_representation(&d, &rep, Truncation::Full).unwrap().is_equal());
    }

    #[test]
    fn certificates() {
        let inv = ParamKind::InversePolynomial { c: ratio(1, 1), s: 2, d: ratio(1, 1) };
        for c in 1..=3 {
            assert_eq!(dagger_check(DaggerInput::Ti(&inv), c, 10).verdict, DaggerVerdict::Diverges);
        }
        let rep = dagger_check(DaggerInput::Worlds(WorldFamily::SquareExponential), 1, 30);
        assert_eq!(rep.verdict, DaggerVerdict::Holds);
        assert!(rep.dagger_partial.is_finite());
        assert_eq!(dagger_check(DaggerInput::Worlds(WorldFamily::DoublingSizes), 1, 20).verdict, DaggerVerdict::Diverges);
    }
}
