//! Exhaustive world enumeration over finite windows.
//!
//! TI worlds are `F_always ∪ S` for `S` ranging over subsets of the
//! uncertain facts (marginal strictly between 0 and 1). World masses only
//! depend on how many facts of each distinct marginal are present, so they
//! are memoised per such signature.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::distribution::Distribution;
use super::family::Truncation;
use super::mass::Mass;
use super::pdb::{BidPdb, Pdb, PdbError, ENUMERATION_GUARD_BITS};
use super::powprob::Marginal;
use crate::relmodel::{Fact, Instance};

fn merge(mut a: BTreeMap<Instance, Mass>, b: BTreeMap<Instance, Mass>) -> BTreeMap<Instance, Mass> {
    let (mut big, small) = if a.len() >= b.len() { (std::mem::take(&mut a), b) } else { (b, a) };
    for (k, m) in small {
        let e = big.entry(k).or_insert_with(Mass::zero);
        *e = e.add(&m);
    }
    big
}

fn check_guard(bits: u32) -> Result<(), PdbError> {
    if bits > ENUMERATION_GUARD_BITS {
        Err(PdbError::WindowTooLarge {
            bits,
            guard: ENUMERATION_GUARD_BITS,
        })
    } else {
        Ok(())
    }
}

/// Enumerates the worlds of the TI-PDB over `facts`, maps each through `f`
/// (`None` drops the world) and sums masses per image. Zero-mass worlds are
/// never visited. Runs in parallel; the result is deterministic.
pub fn map_ti_worlds<F>(facts: &[(Fact, Marginal)], f: F) -> Result<BTreeMap<Instance, Mass>, PdbError>
where
    F: Fn(&Instance) -> Result<Option<Instance>, PdbError> + Sync,
{
    let mut sorted: Vec<&(Fact, Marginal)> = facts.iter().filter(|(_, m)| !m.is_zero()).collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    sorted.dedup_by(|a, b| a.0 == b.0);

    let mut groups: Vec<&Marginal> = Vec::new();
    // Per fact: None if certain, otherwise (uncertain bit, group).
    let mut slot: Vec<Option<(usize, usize)>> = Vec::with_capacity(sorted.len());
    let mut n = 0usize;
    for (_, m) in &sorted {
        if m.is_one() {
            slot.push(None);
        } else {
            let g = groups.iter().position(|h| *h == m).unwrap_or_else(|| {
                groups.push(m);
                groups.len() - 1
            });
            slot.push(Some((n, g)));
            n += 1;
        }
    }
    check_guard(n as u32)?;
    let mut sizes = vec![0usize; groups.len()];
    for (_, g) in slot.iter().flatten() {
        sizes[*g] += 1;
    }
    let present: Vec<Vec<Mass>> = groups
        .iter()
        .zip(&sizes)
        .map(|(m, &s)| {
            let q = m.to_mass();
            (0..=s).map(|k| q.pow(k)).collect()
        })
        .collect();
    let absent: Vec<Vec<Mass>> = groups
        .iter()
        .zip(&sizes)
        .map(|(m, &s)| {
            let q = m.to_mass().complement();
            (0..=s).map(|k| q.pow(k)).collect()
        })
        .collect();

    let total: u64 = 1 << n;
    let chunks = total.min(512);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = total * c / chunks;
            let hi = total * (c + 1) / chunks;
            let mut out: BTreeMap<Instance, Mass> = BTreeMap::new();
            let mut cache: HashMap<Vec<u32>, Mass> = HashMap::new();
            let mut counts = vec![0u32; groups.len()];
            for mask in lo..hi {
                counts.iter_mut().for_each(|c| *c = 0);
                let mut world = Vec::with_capacity(sorted.len());
                for ((fact, _), s) in sorted.iter().zip(&slot) {
                    match s {
                        None => world.push(fact.clone()),
                        Some((bit, g)) => {
                            if mask >> bit & 1 == 1 {
                                counts[*g] += 1;
                                world.push(fact.clone());
                            }
                        }
                    }
                }
                let world = Instance::from_sorted(world);
                let Some(img) = f(&world)? else { continue };
                let mass = cache
                    .entry(counts.clone())
                    .or_insert_with(|| {
                        counts.iter().enumerate().fold(Mass::one(), |acc, (g, &k)| {
                            acc.mul(&present[g][k as usize])
                                .mul(&absent[g][sizes[g] - k as usize])
                        })
                    })
                    .clone();
                let e = out.entry(img).or_insert_with(Mass::zero);
                *e = e.add(&mass);
            }
            Ok(out)
        })
        .try_reduce(BTreeMap::new, |a, b| Ok(merge(a, b)))
}

/// As [`map_ti_worlds`] for a BID-PDB restricted to its first blocks.
pub fn map_bid_worlds<F>(bid: &BidPdb, trunc: Truncation, f: F) -> Result<BTreeMap<Instance, Mass>, PdbError>
where
    F: Fn(&Instance) -> Result<Option<Instance>, PdbError>,
{
    let nb = trunc.limit(Some(bid.blocks().len()));
    // Choices per block: each positive fact, plus "none" if the residual is positive.
    let choices: Vec<Vec<(Option<&Fact>, Mass)>> = bid.blocks()[..nb]
        .iter()
        .zip(bid.residuals())
        .map(|(block, r)| {
            let mut cs: Vec<(Option<&Fact>, Mass)> = block
                .iter()
                .filter(|(_, p)| !p.is_zero())
                .map(|(f, p)| (Some(f), Mass::from(p)))
                .collect();
            if !r.is_zero() {
                cs.push((None, Mass::from(r)));
            }
            cs
        })
        .collect();
    let log2: f64 = choices.iter().map(|c| (c.len().max(1) as f64).log2()).sum();
    check_guard(log2.ceil() as u32)?;
    let mut out: BTreeMap<Instance, Mass> = BTreeMap::new();
    let mut idx = vec![0usize; choices.len()];
    loop {
        let mut facts = Vec::new();
        let mut mass = Mass::one();
        for (c, &i) in choices.iter().zip(&idx) {
            let (f, m) = &c[i];
            if let Some(f) = f {
                facts.push((*f).clone());
            }
            mass = mass.mul(m);
        }
        let world = Instance::new(facts);
        if let Some(img) = f(&world)? {
            let e = out.entry(img).or_insert_with(Mass::zero);
            *e = e.add(&mass);
        }
        // Mixed-radix increment.
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(out);
            }
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// The exact law of the window: the probability that the random world's
/// intersection with the window equals each subset.
pub fn enumerate_worlds(pdb: &Pdb, trunc: Truncation) -> Result<Distribution, PdbError> {
    match pdb {
        Pdb::Ti(ti) => {
            let window = ti.window(trunc);
            let map = map_ti_worlds(&window, |w| Ok(Some(w.clone())))?;
            Ok(Distribution::from_masses(map, ti.family.window_is_full(trunc)))
        }
        Pdb::Bid(bid) => {
            let map = map_bid_worlds(bid, trunc, |w| Ok(Some(w.clone())))?;
            let full = trunc.limit(Some(bid.blocks().len())) == bid.blocks().len();
            Ok(Distribution::from_masses(map, full))
        }
        Pdb::Explicit(d) => {
            let n = trunc.limit(Some(d.len()));
            let map = d.iter().take(n).map(|(w, m)| (w.clone(), m.clone())).collect();
            Ok(Distribution::from_masses(map, d.is_complete() && n == d.len()))
        }
        Pdb::Family(fam) => fam.materialize(trunc.limit(None), "R"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::pdb::TiPdb;
    use crate::probspace::prob::{ratio, Prob};

    #[test]
    fn two_fact_ti() {
        let a = Fact::new("A", vec![]);
        let b = Fact::new("B", vec![]);
        let ti = TiPdb::from_facts([(a.clone(), Prob::ratio(1, 2)), (b.clone(), Prob::ratio(1, 3))]).unwrap();
        let d = enumerate_worlds(&Pdb::Ti(ti), Truncation::Full).unwrap();
        assert!(d.is_complete());
        assert_eq!(d.get(&Instance::empty()), Mass::from(ratio(1, 3)));
        assert_eq!(d.get(&Instance::new([a.clone()])), Mass::from(ratio(1, 3)));
        assert_eq!(d.get(&Instance::new([b.clone()])), Mass::from(ratio(1, 6)));
        assert_eq!(d.get(&Instance::new([a, b])), Mass::from(ratio(1, 6)));
        assert!(d.total().is_one());
    }

    #[test]
    fn certain_fact_in_every_world() {
        let a = Fact::new("A", vec![]);
        let b = Fact::new("B", vec![]);
        let ti = TiPdb::from_facts([(a.clone(), Prob::one()), (b, Prob::ratio(1, 3))]).unwrap();
        let d = enumerate_worlds(&Pdb::Ti(ti), Truncation::Full).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.support().all(|w| w.contains(&a)));
    }

    #[test]
    fn bid_block_is_exclusive() {
        let f = Fact::ints("R", &[1]);
        let g = Fact::ints("R", &[2]);
        let bid = BidPdb::from_blocks(vec![vec![(f.clone(), Prob::ratio(1, 2)), (g.clone(), Prob::ratio(1, 2))]]).unwrap();
        let d = enumerate_worlds(&Pdb::Bid(bid), Truncation::Full).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.get(&Instance::new([f])), Mass::from(ratio(1, 2)));
        assert_eq!(d.get(&Instance::new([g])), Mass::from(ratio(1, 2)));
    }

    #[test]
    fn guard_rejects_huge_windows() {
        let facts: Vec<(Fact, Marginal)> = (0..30).map(|i| (Fact::ints("R", &[i]), Prob::ratio(1, 2).into())).collect();
        assert!(matches!(
            map_ti_worlds(&facts, |w| Ok(Some(w.clone()))),
            Err(PdbError::WindowTooLarge { .. })
        ));
    }
}
