use serde::Serialize;

use super::{embed_lower, insensitive_closure, restrict_lower};
use crate::cube::{find_line_in_set, is_ij_insensitive, CubeSet, SearchOptions};
use crate::error::{Error, Result};
use crate::measures::equal_slices_measure;
use crate::rational::{serde_ratio, Rational};
use crate::sperner::line_density;

/// The sets `C_j = {x : x^{k->j} in B}` built from a line-free `A ⊆ [k]^m`
/// and `B = A ∩ [k-1]^m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForbiddenSets {
    /// `B` as a subset of `[k-1]^m`.
    pub b: CubeSet,
    /// `C_1, ..., C_{k-1}`.
    pub c_sets: Vec<CubeSet>,
    /// `C = C_1 ∩ ... ∩ C_{k-1}`.
    pub c: CubeSet,
    /// `ν(C)` over `[k]^m`.
    #[serde(with = "serde_ratio")]
    pub c_density: Rational,
    /// `ν(C ∖ [k-1]^m)` over `[k]^m`.
    #[serde(with = "serde_ratio")]
    pub c_outside_density: Rational,
    /// Equal-slices mass of the non-degenerate lines of `B`, each line read as
    /// a point of `[k]^m` with its wildcards written `k`.
    #[serde(with = "serde_ratio")]
    pub b_line_density: Rational,
    /// Each `C_j` passed the `jk`-insensitivity check.
    pub insensitive: bool,
    /// `A ∩ C ⊆ [k-1]^m`.
    pub disjoint: bool,
}

impl ForbiddenSets {
    /// Points of `C` outside `[k-1]^m` correspond one-to-one, measure
    /// included, to the lines of `B`.
    pub fn bridge_holds(&self) -> bool {
        self.c_outside_density == self.b_line_density
    }
}

/// Builds the forbidden sets and checks their two structural properties.
pub fn forbidden_sets(a: &CubeSet) -> Result<ForbiddenSets> {
    let shape = a.shape();
    let k = shape.k();
    if k < 2 {
        return Err(Error::param("forbidden sets need k >= 2"));
    }
    if let Some(line) = find_line_in_set(a, &SearchOptions::default())? {
        return Err(Error::ContainsLine(line.to_string()));
    }
    let b = restrict_lower(a)?;
    let b_in_cube = embed_lower(&b, k)?;
    let mut c_sets = Vec::with_capacity(k - 1);
    let mut insensitive = true;
    for j in 1..k as u8 {
        let cj = insensitive_closure(&b_in_cube, k as u8, j)?;
        insensitive &= is_ij_insensitive(&cj, j, k as u8)?;
        c_sets.push(cj);
    }
    let mut c = CubeSet::full(shape);
    for cj in &c_sets {
        c = c.intersection(cj)?;
    }
    let has_k = CubeSet::from_predicate(shape, |d| d.contains(&(k as u8)));
    let disjoint = a.intersection(&c)?.intersection_len(&has_k) == 0;
    let c_outside = c.intersection(&has_k)?;
    // degenerate patterns of B are the points of B themselves
    let all_patterns = line_density(&b, &SearchOptions::default())?;
    let b_line_density = all_patterns - equal_slices_measure(&b_in_cube).into_inner();
    Ok(ForbiddenSets {
        c_density: equal_slices_measure(&c).into_inner(),
        c_outside_density: equal_slices_measure(&c_outside).into_inner(),
        b,
        c_sets,
        c,
        b_line_density,
        insensitive,
        disjoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{is_line_free, CubeShape};
    use crate::measures::seeded_rng;
    use crate::sperner::probabilistic_sperner_density;

    fn random_line_free(shape: CubeShape, seed: u64) -> CubeSet {
        // greedy in a random order
        use rand::seq::SliceRandom;
        let mut rng = seeded_rng(seed);
        let mut order: Vec<u64> = (0..shape.size()).collect();
        order.shuffle(&mut rng);
        let mut a = CubeSet::empty(shape);
        for i in order {
            a.insert_index(i);
            if !is_line_free(&a) {
                a.remove_index(i);
            }
        }
        a
    }

    #[test]
    fn empty_b_gives_empty_sets() {
        let s = CubeShape::new(3, 3).unwrap();
        let f = forbidden_sets(&CubeSet::empty(s)).unwrap();
        assert!(f.c_sets.iter().all(|c| c.is_empty()) && f.c.is_empty());
        assert!(f.bridge_holds());
    }

    #[test]
    fn rejects_sets_with_lines() {
        let s = CubeShape::new(3, 2).unwrap();
        assert!(matches!(forbidden_sets(&CubeSet::full(s)), Err(Error::ContainsLine(_))));
    }

    #[test]
    fn binary_case_exhaustive() {
        // k = 2: C_1 = {x : x^{2->1} in B}; A ∩ C_1 ⊆ [1]^m
        for m in 1..=4 {
            let s = CubeShape::new(2, m).unwrap();
            for mask in 0u64..(1 << s.size()) {
                let a = CubeSet::from_indices(s, (0..s.size()).filter(|i| mask >> i & 1 == 1)).unwrap();
                if !is_line_free(&a) {
                    continue;
                }
                let f = forbidden_sets(&a).unwrap();
                assert!(f.insensitive && f.disjoint && f.bridge_holds());
            }
        }
    }

    #[test]
    fn random_ternary_sets() {
        for (seed, m) in (0..60).zip([2, 3, 4].into_iter().cycle()) {
            let a = random_line_free(CubeShape::new(3, m).unwrap(), seed);
            let f = forbidden_sets(&a).unwrap();
            assert!(f.insensitive && f.disjoint && f.bridge_holds(), "seed {seed}");
        }
    }

    #[test]
    fn bridge_matches_sperner_line_density() {
        // for k = 3, B lives in [2]^m and its line density is the Sperner one
        for seed in 0..20 {
            let a = random_line_free(CubeShape::new(3, 4).unwrap(), seed);
            let f = forbidden_sets(&a).unwrap();
            let sp = probabilistic_sperner_density(&f.b).unwrap();
            let degenerate = equal_slices_measure(&embed_lower(&f.b, 3).unwrap()).into_inner();
            assert_eq!(f.c_outside_density, sp.line_density - degenerate);
        }
    }
}
