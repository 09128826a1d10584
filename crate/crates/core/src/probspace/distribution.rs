use std::collections::BTreeMap;

use num::{BigRational, One, Zero};
use thiserror::Error;

use super::mass::{Comparison, Mass, DEFAULT_PRECISION};
use super::pdb::PdbError;
use super::prob::{format_rational, Prob};
use crate::relmodel::{EvalError, Fact, Formula, Instance, PreparedQuery, PreparedView, View};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CondError {
    #[error("conditioning on null event")]
    NullEvent,
    #[error("condition must be a sentence")]
    NotASentence,
    #[error("probability of the condition is not rational")]
    IrrationalNormalizer,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A finite map from instances to exact masses.
///
/// `complete` marks that the map is the whole law (total mass 1) rather
/// than a window of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    worlds: BTreeMap<Instance, Mass>,
    complete: bool,
}

/// Explicitly listed worlds with probabilities.
pub type ExplicitPdb = Distribution;

impl Distribution {
    /// Builds from accumulated masses; zero entries are dropped.
    pub fn from_masses(worlds: BTreeMap<Instance, Mass>, complete: bool) -> Self {
        let worlds = worlds.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        Distribution { worlds, complete }
    }

    /// Explicit PDB from distinct worlds; `complete` iff the masses sum to 1.
    pub fn explicit(worlds: impl IntoIterator<Item = (Instance, Prob)>) -> Result<Self, PdbError> {
        let mut map = BTreeMap::new();
        let mut total = BigRational::zero();
        for (w, p) in worlds {
            total += p.value();
            if map.contains_key(&w) {
                return Err(PdbError::DuplicateWorld(w.to_string()));
            }
            map.insert(w, Mass::from(p));
        }
        if total > BigRational::one() {
            return Err(PdbError::MassExceedsOne(format_rational(&total)));
        }
        Ok(Distribution::from_masses(map, total.is_one()))
    }

    pub fn point(instance: Instance) -> Self {
        Distribution {
            worlds: [(instance, Mass::one())].into_iter().collect(),
            complete: true,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Instance, &Mass)> {
        self.worlds.iter()
    }

    pub fn get(&self, instance: &Instance) -> Mass {
        self.worlds.get(instance).cloned().unwrap_or_else(Mass::zero)
    }

    /// Worlds with positive mass, in canonical order.
    pub fn support(&self) -> impl Iterator<Item = &Instance> {
        self.worlds.keys()
    }

    pub fn total(&self) -> Mass {
        self.worlds.values().fold(Mass::zero(), |a, m| a.add(m))
    }

    /// `∑_{D ∋ f} P(D)`.
    pub fn marginal(&self, fact: &Fact) -> Mass {
        self.worlds
            .iter()
            .filter(|(w, _)| w.contains(fact))
            .fold(Mass::zero(), |a, (_, m)| a.add(m))
    }

    /// Total mass of worlds satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&Instance) -> bool) -> Mass {
        self.worlds
            .iter()
            .filter(|(w, _)| pred(w))
            .fold(Mass::zero(), |a, (_, m)| a.add(m))
    }

    /// Probabilities as rationals, if all are.
    pub fn rational_worlds(&self) -> Option<Vec<(&Instance, &BigRational)>> {
        self.worlds
            .iter()
            .map(|(w, m)| m.as_rational().map(|r| (w, r)))
            .collect()
    }
}

/// `P′({D′}) = P({D : V(D) = D′})`.
pub fn pushforward(dist: &Distribution, view: &View) -> Result<Distribution, EvalError> {
    let view = PreparedView::new(view)?;
    let mut out: BTreeMap<Instance, Mass> = BTreeMap::new();
    for (w, m) in dist.iter() {
        let img = view.apply(w)?;
        let e = out.entry(img).or_insert_with(Mass::zero);
        *e = e.add(m);
    }
    Ok(Distribution::from_masses(out, dist.complete))
}

/// Restricts to worlds satisfying `sentence` and renormalises exactly.
pub fn condition_distribution(dist: &Distribution, sentence: &Formula) -> Result<Distribution, CondError> {
    if !sentence.is_sentence() {
        return Err(CondError::NotASentence);
    }
    let sentence = PreparedQuery::sentence(sentence)?;
    let mut kept = BTreeMap::new();
    let mut z = Mass::zero();
    for (w, m) in dist.iter() {
        if sentence.holds(w)? {
            z = z.add(m);
            kept.insert(w.clone(), m.clone());
        }
    }
    normalize(kept, &z, dist.complete)
}

pub(crate) fn normalize(
    kept: BTreeMap<Instance, Mass>,
    z: &Mass,
    complete: bool,
) -> Result<Distribution, CondError> {
    if z.is_zero() {
        return Err(CondError::NullEvent);
    }
    let z = z.as_rational().ok_or(CondError::IrrationalNormalizer)?;
    Ok(Distribution::from_masses(
        kept.into_iter().map(|(w, m)| (w, m.div_rational(z))).collect(),
        complete,
    ))
}

/// Result of comparing two distributions world by world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equality {
    Equal,
    /// First instance (canonical order) whose masses differ.
    NotEqual(Instance),
    /// First instance whose masses could not be separated.
    Indeterminate(Instance),
}

impl Equality {
    pub fn is_equal(&self) -> bool {
        matches!(self, Equality::Equal)
    }
}

pub fn distributions_equal(a: &Distribution, b: &Distribution) -> Equality {
    distributions_equal_at(a, b, DEFAULT_PRECISION)
}

/// Exact comparison of canonical masses; interval comparison at `bits`
/// only when a mass could not be put in canonical form.
pub fn distributions_equal_at(a: &Distribution, b: &Distribution, bits: u32) -> Equality {
    let keys: std::collections::BTreeSet<&Instance> = a.worlds.keys().chain(b.worlds.keys()).collect();
    let mut undecided = None;
    for k in keys {
        let x = a.get(k);
        let y = b.get(k);
        if x == y && !x.is_opaque() {
            continue;
        }
        match x.compare(&y, bits) {
            Comparison::Equal => {}
            Comparison::Less | Comparison::Greater => return Equality::NotEqual(k.clone()),
            Comparison::Indeterminate => {
                undecided.get_or_insert_with(|| k.clone());
            }
        }
    }
    match undecided {
        Some(k) => Equality::Indeterminate(k),
        None => Equality::Equal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::powprob::PowProb;
    use crate::probspace::prob::ratio;
    use crate::relmodel::parse_formula;

    fn inst(facts: &[&str]) -> Instance {
        Instance::new(facts.iter().map(|r| Fact::new(*r, vec![])))
    }

    #[test]
    fn equality_witness() {
        let a = Distribution::explicit([(inst(&[]), Prob::ratio(1, 2)), (inst(&["A"]), Prob::ratio(1, 2))]).unwrap();
        let b = Distribution::explicit([(inst(&[]), Prob::ratio(1, 3)), (inst(&["A"]), Prob::ratio(2, 3))]).unwrap();
        assert_eq!(distributions_equal(&a, &a), Equality::Equal);
        assert_eq!(distributions_equal(&a, &b), Equality::NotEqual(inst(&[])));
    }

    #[test]
    fn powers_cancel_in_comparison() {
        let r = PowProb::root(Prob::ratio(1, 5), 2);
        let m = r.to_mass().mul(&r.to_mass());
        let a = Distribution::from_masses([(inst(&["A"]), m), (inst(&[]), Mass::from(ratio(4, 5)))].into_iter().collect(), true);
        let b = Distribution::explicit([(inst(&["A"]), Prob::ratio(1, 5)), (inst(&[]), Prob::ratio(4, 5))]).unwrap();
        assert_eq!(distributions_equal(&a, &b), Equality::Equal);
    }

    #[test]
    fn conditioning() {
        let a = Fact::new("A", vec![]);
        let b = Fact::new("B", vec![]);
        let q = Prob::ratio(1, 4);
        let d = Distribution::explicit([
            (Instance::empty(), q.clone()),
            (Instance::new([a.clone()]), q.clone()),
            (Instance::new([b.clone()]), q.clone()),
            (Instance::new([a.clone(), b.clone()]), q),
        ])
        .unwrap();
        let c = condition_distribution(&d, &parse_formula("A() | B()").unwrap()).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|(_, m)| *m == Mass::from(ratio(1, 3))));
        let same = condition_distribution(&d, &Formula::truth()).unwrap();
        assert_eq!(same, d);
        assert_eq!(
            condition_distribution(&d, &Formula::falsity()).unwrap_err(),
            CondError::NullEvent
        );
    }
}
