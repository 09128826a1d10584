use num::{BigInt, BigRational, One, Zero};

use super::DiagError;
use crate::probspace::{enumerate_worlds, moment, MomentReport, Pdb, Tail, TiPdb, Truncation};
use crate::relmodel::{Schema, View};

/// `E(X^k) ≤ E(X^{k−1})·(k−1+E(X))` for `X = |D|`, all terms exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentCheck {
    pub k: u32,
    pub moment: BigRational,
    pub bound: BigRational,
    pub holds: bool,
}

fn raw_moments(ti: &TiPdb, k_max: u32) -> Result<Vec<BigRational>, DiagError> {
    if !ti.is_finite() {
        return Err(DiagError::NotFinite);
    }
    let dist = enumerate_worlds(&Pdb::Ti(ti.clone()), Truncation::Full)?;
    let mut out = vec![BigRational::zero(); k_max as usize + 1];
    for (w, m) in dist.iter() {
        let p = m.as_rational().ok_or(crate::probspace::PdbError::NonRational)?;
        let s = BigRational::from_integer(BigInt::from(w.len()));
        let mut pow = BigRational::one();
        for slot in out.iter_mut() {
            *slot += p * &pow;
            pow *= &s;
        }
    }
    Ok(out)
}

/// Checks the inequality for `k = 2..=k_max` by world enumeration.
pub fn moment_inequality_check(ti: &TiPdb, k_max: u32) -> Result<Vec<MomentCheck>, DiagError> {
    let m = raw_moments(ti, k_max.max(1))?;
    Ok((2..=k_max)
        .map(|k| {
            let bound = &m[k as usize - 1] * (BigRational::from_integer(BigInt::from(k - 1)) + &m[1]);
            MomentCheck {
                k,
                holds: m[k as usize] <= bound,
                moment: m[k as usize].clone(),
                bound,
            }
        })
        .collect())
}

pub fn finite_moments_report(pdb: &Pdb, k_max: u32, trunc: Truncation) -> Result<Vec<MomentReport>, DiagError> {
    (1..=k_max).map(|k| Ok(moment(pdb, k, trunc)?)).collect()
}

/// Upper bound on `E(|V(D)|^k)` from base moments, using the size bound
/// `|V(D)| ≤ m·(r_max·|D| + c)^r` of [`crate::relmodel::view_size_bound`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageMomentBound {
    pub k: u32,
    /// Bound computed from the base window moments.
    pub partial: BigRational,
    /// Bound on the contribution of the base tail.
    pub tail: Tail,
}

pub fn image_moment_bound(
    base: &Pdb,
    input: &Schema,
    view: &View,
    k: u32,
    trunc: Truncation,
) -> Result<ImageMomentBound, DiagError> {
    // (a·X + b)^{r k}, expanded binomially.
    let views = BigRational::from_integer(BigInt::from(view.len()));
    let a = BigRational::from_integer(BigInt::from(input.r_max()));
    let b = BigRational::from_integer(BigInt::from(view.constants().len()));
    let deg = view.max_arity() * k as usize;
    let mut partial = BigRational::zero();
    let mut tail = Tail::Bound(BigRational::zero());
    let mut binom = BigInt::one();
    for j in 0..=deg {
        let coeff = BigRational::from_integer(binom.clone()) * num::pow(a.clone(), j) * num::pow(b.clone(), deg - j);
        binom = binom * BigInt::from(deg - j) / BigInt::from(j + 1);
        if j == 0 {
            partial += coeff;
            continue;
        }
        let rep = moment(base, j as u32, trunc)?;
        partial += &coeff * &rep.partial;
        tail = match (tail, rep.tail) {
            (Tail::Infinite, _) | (_, Tail::Infinite) if !coeff.is_zero() => Tail::Infinite,
            (Tail::Unknown, _) | (_, Tail::Unknown) if !coeff.is_zero() => Tail::Unknown,
            (Tail::Bound(t), Tail::Bound(u)) => Tail::Bound(t + &coeff * u),
            (t, _) => t,
        };
    }
    let scale = num::pow(views, k as usize);
    let tail = match tail {
        Tail::Bound(t) => Tail::Bound(t * &scale),
        t => t,
    };
    Ok(ImageMomentBound { k, partial: partial * scale, tail })
}
