//! Probability assignments for a given list of worlds `D_1, D_2, …`: one that
//! always satisfies the summability condition and one that always violates
//! it (when worlds of unbounded size occur).

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, One, Zero};

use super::representation::CompileError;
use crate::probspace::{Distribution, Mass, Prob};
use crate::relmodel::Instance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignedWorld {
    pub instance: Instance,
    /// Unnormalised weight.
    pub z: BigRational,
    pub p: Prob,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepresentableAssignment {
    pub worlds: Vec<AssignedWorld>,
    /// `Z = ∑ z_i`.
    pub normalizer: BigRational,
    /// `|D_i|·P_i^{1/|D_i|}` per non-empty world, exactly.
    pub terms: Vec<Mass>,
}

impl RepresentableAssignment {
    pub fn distribution(&self) -> Distribution {
        Distribution::explicit(self.worlds.iter().map(|w| (w.instance.clone(), w.p.clone())))
            .expect("assignment sums to 1")
    }
}

fn check_distinct(worlds: &[Instance]) -> Result<(), CompileError> {
    let mut seen = BTreeSet::new();
    for w in worlds {
        if !seen.insert(w) {
            return Err(CompileError::DuplicateWorld(w.to_string()));
        }
    }
    if worlds.is_empty() {
        return Err(CompileError::EmptyWorldList);
    }
    Ok(())
}

fn pow2_neg(i: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << i)
}

/// `z_i = (2^{−i}/|D_i|)^{|D_i|}` (1 for the empty world), `P_i = z_i/Z`.
/// Then `|D_i|·P_i^{1/|D_i|} = 2^{−i}·Z^{−1/|D_i|} ≤ 2^{−i}/Z`, so the
/// summability condition holds for `c = 1` (and hence every `c`).
pub fn assign_representable_probs(worlds: &[Instance]) -> Result<RepresentableAssignment, CompileError> {
    check_distinct(worlds)?;
    let zs: Vec<BigRational> = worlds
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let s = w.len();
            if s == 0 {
                BigRational::one()
            } else {
                num::pow(pow2_neg(i + 1) / BigRational::from_integer(BigInt::from(s)), s)
            }
        })
        .collect();
    let normalizer: BigRational = zs.iter().sum();
    let mut out = Vec::new();
    let mut terms = Vec::new();
    for (i, (w, z)) in worlds.iter().zip(zs).enumerate() {
        let p = &z / &normalizer;
        let s = w.len();
        if s > 0 {
            let e = BigRational::new(BigInt::one(), BigInt::from(s));
            let term = Mass::from_powers([(&p, &e)]).mul_rational(&BigRational::from_integer(BigInt::from(s)));
            let inv_z = normalizer.recip();
            let half = BigRational::new(BigInt::one(), BigInt::from(2));
            let expected = Mass::from_powers([(&half, &BigRational::from_integer(BigInt::from(i + 1))), (&inv_z, &e)]);
            debug_assert_eq!(term, expected);
            terms.push(term);
        }
        out.push(AssignedWorld {
            instance: w.clone(),
            z,
            p: Prob::new(p).expect("z_i ≤ Z"),
        });
    }
    Ok(RepresentableAssignment {
        worlds: out,
        normalizer,
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivergentAssignment {
    pub worlds: Vec<(Instance, Prob)>,
    /// Positions (0-based) of the greedy subsequence with `|D| ≥ k` at step `k`.
    pub selected: Vec<usize>,
}

impl DivergentAssignment {
    /// Truncation of the (infinite-list) law; total mass is below 1.
    pub fn distribution(&self) -> Distribution {
        let map: BTreeMap<Instance, Mass> =
            self.worlds.iter().map(|(w, p)| (w.clone(), Mass::from(p.value().clone()))).collect();
        Distribution::from_masses(map, false)
    }

    /// `∑ |D|·P^{c/|D|}` over the selected worlds, in `f64`.
    pub fn selected_dagger_sum(&self, c: usize) -> f64 {
        self.selected
            .iter()
            .map(|&i| {
                let (w, p) = &self.worlds[i];
                super::dagger::dagger_term(w.len(), p, c)
            })
            .sum()
    }
}

/// Greedily picks `D_{i_1}, D_{i_2}, …` with `|D_{i_k}| ≥ k` and gives it
/// `1/(2k(k+1))`; the `j`-th of the remaining worlds gets `2^{−j}/2`.
/// Each selected world contributes `|D|·P^{c/|D|} ≥ k·(1/(2k(k+1)))^{c/k}`,
/// which tends to infinity with `k`.
pub fn assign_divergent_probs(worlds: &[Instance]) -> Result<DivergentAssignment, CompileError> {
    check_distinct(worlds)?;
    if worlds.iter().all(Instance::is_empty) {
        return Err(CompileError::NoIncreasingSubsequence);
    }
    let mut k = 1usize;
    let mut j = 0usize;
    let mut selected = Vec::new();
    let mut out = Vec::new();
    for (i, w) in worlds.iter().enumerate() {
        let p = if w.len() >= k {
            selected.push(i);
            let kk = BigInt::from(k);
            k += 1;
            BigRational::new(BigInt::one(), BigInt::from(2) * &kk * (kk + 1))
        } else {
            j += 1;
            pow2_neg(j + 1)
        };
        debug_assert!(!p.is_zero());
        out.push((w.clone(), Prob::new(p).expect("below 1")));
    }
    Ok(DivergentAssignment { worlds: out, selected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relmodel::Fact;

    fn sized(n: i64) -> Instance {
        Instance::new((0..n).map(|i| Fact::ints("R", &[i])))
    }

    #[test]
    fn representable_weights() {
        let ws = vec![Instance::empty(), sized(1), sized(2)];
        let a = assign_representable_probs(&ws).unwrap();
        // z = 1, 1/4, (1/8/2)^2 = 1/256
        assert_eq!(a.normalizer, BigRational::new(321.into(), 256.into()));
        assert!(a.distribution().is_complete());
        assert_eq!(a.terms.len(), 2);
        assert!(matches!(
            assign_representable_probs(&[sized(1), sized(1)]),
            Err(CompileError::DuplicateWorld(_))
        ));
    }

    #[test]
    fn divergent_greedy() {
        let ws: Vec<Instance> = [0, 3, 1, 2, 5].into_iter().map(sized).collect();
        let a = assign_divergent_probs(&ws).unwrap();
        assert_eq!(a.selected, vec![1, 3, 4]);
        assert_eq!(a.worlds[1].1, Prob::ratio(1, 4));
        assert_eq!(a.worlds[3].1, Prob::ratio(1, 12));
        assert_eq!(a.worlds[0].1, Prob::ratio(1, 4));
        assert_eq!(a.worlds[2].1, Prob::ratio(1, 8));
        assert!(assign_divergent_probs(&[Instance::empty()]).is_err());
    }
}
