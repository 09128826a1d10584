use std::collections::BTreeSet;

use crate::probspace::Distribution;
use crate::relmodel::{Fact, Instance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Two facts of positive marginal that never co-occur.
    MutualExclusive(Fact, Fact),
    /// Two incomparable inclusion-maximal worlds.
    NoMaxWorld(Instance, Instance),
    /// A world containing every other world.
    MaxWorld(Instance),
}

/// First pair (canonical order) of support facts with zero joint mass.
/// Monotone views over TI never produce one.
pub fn mutual_exclusive_witness(dist: &Distribution) -> Option<Witness> {
    let facts: BTreeSet<&Fact> = dist.support().flat_map(|w| w.iter()).collect();
    let mut together: BTreeSet<(&Fact, &Fact)> = BTreeSet::new();
    for w in dist.support() {
        let fs = w.facts();
        for (i, f) in fs.iter().enumerate() {
            for g in &fs[i + 1..] {
                together.insert((f, g));
            }
        }
    }
    let facts: Vec<&Fact> = facts.into_iter().collect();
    for (i, f) in facts.iter().enumerate() {
        for g in &facts[i + 1..] {
            if !together.contains(&(*f, *g)) {
                return Some(Witness::MutualExclusive((*f).clone(), (*g).clone()));
            }
        }
    }
    None
}

/// `MaxWorld(D)` if one world contains all others, else two incomparable
/// maximal worlds.
pub fn max_world_check(dist: &Distribution) -> Witness {
    let worlds: Vec<&Instance> = dist.support().collect();
    let maximal: Vec<&Instance> = worlds
        .iter()
        .filter(|w| !worlds.iter().any(|v| v.len() > w.len() && w.is_subset(v)))
        .copied()
        .collect();
    match maximal.as_slice() {
        [] => Witness::MaxWorld(Instance::empty()),
        [m] => Witness::MaxWorld((*m).clone()),
        [a, b, ..] => Witness::NoMaxWorld((*a).clone(), (*b).clone()),
    }
}
