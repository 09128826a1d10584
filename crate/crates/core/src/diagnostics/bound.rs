use std::collections::BTreeSet;

use num::{BigInt, BigRational, Zero};

use super::DiagError;
use crate::probspace::{enumerate_worlds, pushforward, Comparison, Mass, Pdb, TiPdb, Truncation, DEFAULT_PRECISION};
use crate::relmodel::{Atom, Fact, Instance, View};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub target: Instance,
    /// `adom(target)` minus the view's constants.
    pub a_star: BTreeSet<Atom>,
    /// Base facts mentioning an element of `a_star`.
    pub f_star: Vec<Fact>,
    /// Largest base arity.
    pub r: usize,
    pub bound: Mass,
    pub actual: Mass,
    pub holds: bool,
}

/// `Pr(V(I) = D) ≤ |A*|·(r²·|A*|^{r−1}·∑_{f∈F*} p_f)^{|A*|/r}`, with the
/// left side computed by enumeration.
pub fn view_prob_bound(ti: &TiPdb, view: &View, target: &Instance) -> Result<BoundReport, DiagError> {
    if !ti.is_finite() {
        return Err(DiagError::NotFinite);
    }
    let consts = view.constants();
    let a_star: BTreeSet<Atom> = target.adom().into_iter().filter(|a| !consts.contains(a)).collect();
    if a_star.is_empty() {
        return Err(DiagError::NotApplicable("every element of the target is a view constant".into()));
    }
    let r = ti.schema.r_max();
    if r == 0 {
        return Err(DiagError::NotApplicable("base schema has only nullary relations".into()));
    }
    let facts = ti.exact_facts()?;
    let (f_star, ps): (Vec<Fact>, Vec<BigRational>) = facts
        .into_iter()
        .filter(|(f, _)| f.args.iter().any(|a| a_star.contains(a)))
        .map(|(f, p)| (f, p.into_inner()))
        .unzip();
    let sum: BigRational = ps.iter().sum();
    let n = BigRational::from_integer(BigInt::from(a_star.len()));
    let inner = BigRational::from_integer(BigInt::from(r * r)) * num::pow(n.clone(), r - 1) * sum;
    let exp = BigRational::new(BigInt::from(a_star.len()), BigInt::from(r));
    let bound = if inner.is_zero() {
        Mass::zero()
    } else {
        Mass::from_powers([(&inner, &exp)]).mul_rational(&n)
    };
    let dist = pushforward(&enumerate_worlds(&Pdb::Ti(ti.clone()), Truncation::Full)?, view)?;
    let actual = dist.get(target);
    let holds = match actual.compare(&bound, DEFAULT_PRECISION) {
        Comparison::Indeterminate => matches!(actual.compare(&bound, 8 * DEFAULT_PRECISION), Comparison::Less | Comparison::Equal),
        c => matches!(c, Comparison::Less | Comparison::Equal),
    };
    Ok(BoundReport {
        target: target.clone(),
        a_star,
        f_star,
        r,
        bound,
        actual,
        holds,
    })
}

/// `d·(a·d^{r−1})^{d/r}`, the right-hand side of the necessary condition for
/// domain-disjoint PDBs.
pub fn disjoint_bound_value(r: u32, a: f64, d: f64) -> f64 {
    let r = r as f64;
    d * (a * d.powf(r - 1.0)).powf(d / r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisjointBoundRow {
    pub n: f64,
    pub d: f64,
    pub value: f64,
    /// `Z/n²` with `Z = 6/π²`.
    pub target: f64,
    /// `value < target`: the necessary inequality fails at `n`.
    pub fails: bool,
}

/// Replays the domain-disjoint counterexample: `d_n = ⌈ln n⌉`, `a_n = 1/n`,
/// `P(D_n) = Z/n²`.
pub fn disjoint_bound_table(r: u32, ns: &[f64]) -> Vec<DisjointBoundRow> {
    let z = 6.0 / std::f64::consts::PI.powi(2);
    ns.iter()
        .map(|&n| {
            let d = n.ln().ceil();
            let value = disjoint_bound_value(r, 1.0 / n, d);
            let target = z / (n * n);
            DisjointBoundRow { n, d, value, target, fails: value < target }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::{ratio, Prob};
    use crate::relmodel::{parse_formula, Query};

    #[test]
    fn single_edge_identity() {
        let ti = TiPdb::from_facts([(Fact::ints("E", &[1, 2]), Prob::ratio(1, 2))]).unwrap();
        let view = View::identity(&ti.schema);
        let rep = view_prob_bound(&ti, &view, &Instance::new([Fact::ints("E", &[1, 2])])).unwrap();
        assert_eq!(rep.a_star.len(), 2);
        assert_eq!(rep.bound, Mass::from(ratio(8, 1)));
        assert_eq!(rep.actual, Mass::from(ratio(1, 2)));
        assert!(rep.holds);
    }

    #[test]
    fn constants_only_target() {
        let ti = TiPdb::from_facts([(Fact::ints("E", &[1, 2]), Prob::ratio(1, 2))]).unwrap();
        let view = View::single("Q", Query::with_vars(["x"], parse_formula("x = 1 & E(1,2)").unwrap()).unwrap());
        let err = view_prob_bound(&ti, &view, &Instance::new([Fact::ints("Q", &[1])]));
        assert!(matches!(err, Err(DiagError::NotApplicable(_))));
    }

    #[test]
    fn table_eventually_fails() {
        let rows = disjoint_bound_table(1, &[1e3, 1e6, 1e12]);
        assert!(rows.last().unwrap().fails);
    }
}
