//! Moments of the instance size `E(|D|^k)`.
//!
//! For TI and BID the size is a sum of independent indicators (one per fact,
//! resp. per block), so the exact window law of the size comes from a
//! Poisson-binomial convolution. Tails of infinite families are bounded by
//! closed forms and, for `k > 1`, by iterating
//! `E(X^k) ≤ E(X^{k−1})·(k−1+E(X))`.

use num::{BigInt, BigRational, BigUint, One, Zero};

use super::distribution::Distribution;
use super::family::Truncation;
use super::pdb::{Pdb, PdbError, WorldFamily};

/// What is known about `∑` over everything outside the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Upper bound on the missing part (0 for complete windows).
    Bound(BigRational),
    Infinite,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentReport {
    pub k: u32,
    /// Exact `∑ |D|^k P(D)` over the window.
    pub partial: BigRational,
    pub tail: Tail,
}

/// Law of `∑ X_i` for independent `X_i ~ Bernoulli(p_i)`.
pub fn size_distribution(marginals: &[BigRational]) -> Vec<BigRational> {
    let mut dist = vec![BigRational::one()];
    for p in marginals {
        let q = BigRational::one() - p;
        let mut next = vec![BigRational::zero(); dist.len() + 1];
        for (s, m) in dist.iter().enumerate() {
            next[s] += m * &q;
            next[s + 1] += m * p;
        }
        dist = next;
    }
    dist
}

fn raw_moment(sizes: &[BigRational], k: u32) -> BigRational {
    sizes
        .iter()
        .enumerate()
        .map(|(s, p)| p * BigRational::from_integer(num::pow(BigInt::from(s), k as usize)))
        .sum()
}

/// `E(X^k)` upper bounds from an upper bound `u1` on `E(X)`.
fn recursive_bounds(u1: &BigRational, k: u32) -> BigRational {
    let mut u = u1.clone();
    for j in 2..=k {
        u = &u * (BigRational::from_integer(BigInt::from(j - 1)) + u1);
    }
    u
}

fn independent_sum(window: &[BigRational], total_mean: Option<BigRational>, full: bool, k: u32) -> MomentReport {
    let partial = raw_moment(&size_distribution(window), k);
    let tail = if full {
        Tail::Bound(BigRational::zero())
    } else {
        match total_mean {
            Some(u1) => {
                let t = recursive_bounds(&u1, k) - &partial;
                Tail::Bound(if t < BigRational::zero() { BigRational::zero() } else { t })
            }
            None => Tail::Unknown,
        }
    };
    MomentReport { k, partial, tail }
}

fn explicit_moment(d: &Distribution, n: usize, k: u32) -> Result<MomentReport, PdbError> {
    let mut partial = BigRational::zero();
    for (w, m) in d.iter().take(n) {
        let p = m.as_rational().ok_or(PdbError::NonRational)?;
        partial += p * BigRational::from_integer(num::pow(BigInt::from(w.len()), k as usize));
    }
    let tail = if d.is_complete() && n >= d.len() {
        Tail::Bound(BigRational::zero())
    } else {
        Tail::Unknown
    };
    Ok(MomentReport { k, partial, tail })
}

fn family_moment(fam: WorldFamily, n: usize, k: u32) -> MomentReport {
    let partial: BigRational = fam
        .terms(n)
        .into_iter()
        .map(|(s, p)| p * BigRational::from_integer(BigInt::from(num::pow(s, k as usize))))
        .sum();
    let tail = match fam {
        // The truncation is normalised, hence a complete finite law.
        WorldFamily::SquareExponential => Tail::Bound(BigRational::zero()),
        WorldFamily::DoublingSizes => match k {
            // ∑_{i>n} 2^i·3/4^i = 3·2^{−n}
            1 => Tail::Bound(BigRational::new(BigInt::from(3), BigInt::from(BigUint::one() << n))),
            // Terms 3·2^{(k−2)i} ≥ 3 never vanish.
            _ => Tail::Infinite,
        },
    };
    MomentReport { k, partial, tail }
}

/// `E(|D|^k)` restricted to the window, with what is known about the rest.
pub fn moment(pdb: &Pdb, k: u32, trunc: Truncation) -> Result<MomentReport, PdbError> {
    assert!(k >= 1, "moment order must be positive");
    match pdb {
        Pdb::Ti(ti) => {
            let window: Vec<BigRational> = ti
                .window(trunc)
                .into_iter()
                .map(|(_, m)| m.as_exact().map(|p| p.value().clone()).ok_or(PdbError::NonRational))
                .collect::<Result<_, _>>()?;
            Ok(independent_sum(&window, ti.family.sum_bound(), ti.family.window_is_full(trunc), k))
        }
        Pdb::Bid(bid) => {
            let nb = trunc.limit(Some(bid.blocks().len()));
            let busy: Vec<BigRational> = bid.residuals().iter().map(|r| r.complement().into_inner()).collect();
            let total: BigRational = busy.iter().sum();
            Ok(independent_sum(&busy[..nb], Some(total), nb == busy.len(), k))
        }
        Pdb::Explicit(d) => explicit_moment(d, trunc.limit(Some(d.len())), k),
        Pdb::Family(fam) => Ok(family_moment(*fam, trunc.limit(None), k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::pdb::TiPdb;
    use crate::probspace::prob::{ratio, Prob};
    use crate::relmodel::Fact;

    #[test]
    fn two_fact_moments() {
        let ti = Pdb::Ti(TiPdb::from_facts([(Fact::new("A", vec![]), Prob::ratio(1, 2)), (Fact::new("B", vec![]), Prob::ratio(1, 3))]).unwrap());
        let m1 = moment(&ti, 1, Truncation::Full).unwrap();
        assert_eq!(m1.partial, ratio(5, 6));
        assert_eq!(m1.tail, Tail::Bound(BigRational::zero()));
        assert_eq!(moment(&ti, 2, Truncation::Full).unwrap().partial, ratio(7, 6));
    }

    #[test]
    fn doubling_family() {
        let m1 = moment(&Pdb::Family(WorldFamily::DoublingSizes), 1, Truncation::First(40)).unwrap();
        let three = BigRational::from_integer(3.into());
        assert_eq!(&three - &m1.partial, BigRational::new(3.into(), BigInt::one() << 40));
        let m2 = moment(&Pdb::Family(WorldFamily::DoublingSizes), 2, Truncation::First(40)).unwrap();
        assert_eq!(m2.partial, BigRational::from_integer(120.into()));
        assert_eq!(m2.tail, Tail::Infinite);
    }
}
