use num::BigUint;

use super::atom::Schema;
use super::formula::{Formula, View};

/// Syntactic query classes, ordered by inclusion:
/// `SjfCQ ⊆ CQ ⊆ UCQ ⊆ FO`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fragment {
    /// Conjunctive, every relation symbol at most once.
    SjfCQ,
    /// Atoms combined with `∃` and `∧`.
    CQ,
    /// Atoms combined with `∃`, `∧` and `∨`.
    UCQ,
    FO,
}

/// Least fragment containing `f`, purely syntactically.
pub fn classify_fragment(f: &Formula) -> Fragment {
    let mut has_or = false;
    let mut has_neg = false;
    f.visit(&mut |g| match g {
        Formula::Or(..) => has_or = true,
        Formula::Not(_) | Formula::Forall(..) => has_neg = true,
        _ => {}
    });
    if has_neg {
        Fragment::FO
    } else if has_or {
        Fragment::UCQ
    } else if f.relation_occurrences().values().all(|&n| n <= 1) {
        Fragment::SjfCQ
    } else {
        Fragment::CQ
    }
}

/// Least fragment containing every query of the view.
pub fn classify_view(view: &View) -> Fragment {
    view.queries()
        .map(|(_, q)| classify_fragment(&q.body))
        .max()
        .unwrap_or(Fragment::SjfCQ)
}

/// `m · (r_max·n + |adom(V)|)^r`, an upper bound on `|V(D)|` for every
/// instance `D` over `input` with `|D| = n`.
///
/// `m` is the number of output relations, `r` the largest head arity and
/// `r_max` the largest input arity.
pub fn view_size_bound(view: &View, input: &Schema, n: usize) -> BigUint {
    let m = BigUint::from(view.len());
    let base = BigUint::from(input.r_max() * n + view.constants().len());
    m * num::pow(base, view.max_arity())
}
