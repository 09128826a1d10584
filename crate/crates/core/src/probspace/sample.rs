//! Seeded Monte-Carlo draws. Rational probabilities with a denominator that
//! fits in 64 bits are sampled exactly by integer draws; everything else
//! falls back to `f64`.

use num::{BigInt, BigRational, Integer, One, ToPrimitive, Zero};
use rand::Rng;

use super::family::Truncation;
use super::pdb::{Pdb, PdbError};
use super::powprob::Marginal;
use crate::relmodel::{Fact, Instance};

fn bernoulli<R: Rng + ?Sized>(p: &Marginal, rng: &mut R) -> bool {
    if p.is_zero() {
        return false;
    }
    if p.is_one() {
        return true;
    }
    if let Some(q) = p.as_exact() {
        if let (Some(n), Some(d)) = (q.value().numer().to_u64(), q.value().denom().to_u64()) {
            return rng.gen_range(0..d) < n;
        }
    }
    rng.gen::<f64>() < p.to_f64()
}

/// Index drawn with the given rational weights (which need not sum to 1;
/// they are renormalised).
fn categorical<R: Rng + ?Sized>(weights: &[BigRational], rng: &mut R) -> usize {
    let lcm = weights.iter().fold(BigInt::one(), |l, w| l.lcm(w.denom()));
    let scaled: Vec<BigInt> = weights.iter().map(|w| (w * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let total: BigInt = scaled.iter().sum();
    if total.is_zero() {
        return 0;
    }
    if let Some(t) = total.to_u64() {
        let mut x = BigInt::from(rng.gen_range(0..t));
        for (i, s) in scaled.iter().enumerate() {
            if x < *s {
                return i;
            }
            x -= s;
        }
        return scaled.len() - 1;
    }
    let tf = total.to_f64().unwrap_or(f64::MAX);
    let mut x = rng.gen::<f64>() * tf;
    for (i, s) in scaled.iter().enumerate() {
        let sf = s.to_f64().unwrap_or(f64::MAX);
        if x < sf {
            return i;
        }
        x -= sf;
    }
    scaled.len() - 1
}

/// One random world of the window. TI facts are independent Bernoulli
/// draws, BID blocks categorical over facts plus residual, explicit PDBs
/// categorical over their (renormalised) listed worlds.
pub fn sample<R: Rng + ?Sized>(pdb: &Pdb, trunc: Truncation, rng: &mut R) -> Result<Instance, PdbError> {
    match pdb {
        Pdb::Ti(ti) => Ok(ti
            .window(trunc)
            .into_iter()
            .filter(|(_, p)| bernoulli(p, rng))
            .map(|(f, _)| f)
            .collect()),
        Pdb::Bid(bid) => {
            let nb = trunc.limit(Some(bid.blocks().len()));
            let mut facts: Vec<Fact> = Vec::new();
            for (block, r) in bid.blocks()[..nb].iter().zip(bid.residuals()) {
                let mut w: Vec<BigRational> = block.iter().map(|(_, p)| p.value().clone()).collect();
                w.push(r.value().clone());
                let i = categorical(&w, rng);
                if i < block.len() {
                    facts.push(block[i].0.clone());
                }
            }
            Ok(Instance::new(facts))
        }
        Pdb::Explicit(d) => {
            let n = trunc.limit(Some(d.len()));
            let worlds: Vec<_> = d.iter().take(n).collect();
            let w: Vec<BigRational> = worlds
                .iter()
                .map(|(_, m)| m.as_rational().cloned().ok_or(PdbError::NonRational))
                .collect::<Result<_, _>>()?;
            if worlds.is_empty() {
                return Ok(Instance::empty());
            }
            Ok(worlds[categorical(&w, rng)].0.clone())
        }
        Pdb::Family(fam) => sample(&Pdb::Explicit(fam.materialize(trunc.limit(None), "R")?), Truncation::Full, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::pdb::TiPdb;
    use crate::probspace::prob::Prob;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_extremes_and_frequency() {
        let a = Fact::new("A", vec![]);
        let b = Fact::new("B", vec![]);
        let c = Fact::new("C", vec![]);
        let ti = Pdb::Ti(TiPdb::from_facts([(a.clone(), Prob::one()), (b.clone(), Prob::zero()), (c.clone(), Prob::ratio(1, 2))]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0;
        for _ in 0..10_000 {
            let w = sample(&ti, Truncation::Full, &mut rng).unwrap();
            assert!(w.contains(&a));
            assert!(!w.contains(&b));
            hits += w.contains(&c) as u32;
        }
        let freq = hits as f64 / 10_000.0;
        assert!((0.45..=0.55).contains(&freq), "{freq}");
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert_eq!(sample(&ti, Truncation::Full, &mut r1).unwrap(), sample(&ti, Truncation::Full, &mut r2).unwrap());
        }
    }
}
