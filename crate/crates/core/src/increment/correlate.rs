use num_traits::Zero;
use serde::Serialize;

use crate::cube::{is_ij_insensitive, CubeSet};
use crate::error::{Error, Result};
use crate::measures::equal_slices_measure;
use crate::rational::{int, serde_ratio, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationParams {
    pub delta: Rational,
    pub gamma: Rational,
    /// Lower bound assumed for `ν(C)`; defaults to its exact value.
    pub theta: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    /// `D^{(i)} = C_1 ∩ ... ∩ C_{i-1} ∩ C_i^c` for `i = 1..k-1`, then `C`:
    /// a point's cell is the first `C_i` it misses.
    pub cells: Vec<CubeSet>,
    /// 1-based index of the chosen cell, never `k`.
    pub chosen: usize,
    /// `D_1, ..., D_{k-1}`: `C_j` for `j < i`, `C_i^c` at `i`, the whole
    /// cube after.
    pub factors: Vec<CubeSet>,
    /// `D = D_1 ∩ ... ∩ D_{k-1}`, equal to the chosen cell.
    pub d: CubeSet,
    #[serde(with = "serde_ratio")]
    pub nu_a: Rational,
    #[serde(with = "serde_ratio")]
    pub nu_c: Rational,
    #[serde(with = "serde_ratio")]
    pub nu_a_c: Rational,
    #[serde(with = "serde_ratio")]
    pub nu_d: Rational,
    #[serde(with = "serde_ratio")]
    pub nu_a_d: Rational,
    #[serde(with = "serde_ratio")]
    pub theta: Rational,
    /// `(δ-γ)ν(D) + δθ/4k`.
    #[serde(with = "serde_ratio")]
    pub bound: Rational,
    /// `0 < γ ≤ δ/4`, `ν(A) ≥ δ-γ`, `ν(A∩C) ≤ (δ/2)ν(C)` and `ν(C) ≥ θ > 0`.
    pub precondition_met: bool,
    /// Each factor passed its insensitivity check.
    pub insensitive: bool,
}

impl Correlation {
    pub fn inequality_holds(&self) -> bool {
        self.nu_a_d >= self.bound
    }

    /// Relative density `ν(A∩D)/ν(D)`.
    pub fn relative_density(&self) -> Rational {
        &self.nu_a_d / &self.nu_d
    }
}

/// Splits `[k]^m` into the cells cut out by `C_1, ..., C_{k-1}` and returns
/// the cell other than `C` on which `A` is most overrepresented, measured by
/// the excess `ν(A∩D) - (δ-γ)ν(D)`.
///
/// The excesses over the first `k-1` cells sum to at least `δθ/4` when the
/// preconditions hold, so the largest one is at least `δθ/4(k-1)`; choosing
/// by excess rather than by ratio is what makes that averaging step go
/// through.
pub fn correlating_d(a: &CubeSet, c_sets: &[CubeSet], params: &CorrelationParams) -> Result<Correlation> {
    let shape = a.shape();
    let k = shape.k();
    if c_sets.len() + 1 != k {
        return Err(Error::LengthMismatch { expected: k - 1, got: c_sets.len() });
    }
    if c_sets.iter().any(|c| c.shape() != shape) {
        return Err(Error::ShapeMismatch("C_j must live in the same cube as A".into()));
    }
    let nu = |s: &CubeSet| equal_slices_measure(s).into_inner();
    let complements: Vec<CubeSet> = c_sets.iter().map(|c| c.complement()).collect();
    let factors_for = |i: usize| -> Vec<CubeSet> {
        (1..k)
            .map(|j| match j.cmp(&i) {
                std::cmp::Ordering::Less => c_sets[j - 1].clone(),
                std::cmp::Ordering::Equal => complements[j - 1].clone(),
                std::cmp::Ordering::Greater => CubeSet::full(shape),
            })
            .collect()
    };
    let intersect = |fs: &[CubeSet]| -> Result<CubeSet> {
        fs.iter().try_fold(CubeSet::full(shape), |acc, f| acc.intersection(f))
    };
    let cells: Vec<CubeSet> = (1..=k).map(|i| intersect(&factors_for(i))).collect::<Result<_>>()?;

    let (delta, gamma) = (&params.delta, &params.gamma);
    let base = delta - gamma;
    let mut chosen: Option<(usize, Rational)> = None;
    for (i, cell) in cells.iter().enumerate().take(k - 1) {
        let nd = nu(cell);
        if nd.is_zero() {
            continue;
        }
        let excess = nu(&a.intersection(cell)?) - &base * &nd;
        if chosen.as_ref().is_none_or(|(_, e)| excess > *e) {
            chosen = Some((i + 1, excess));
        }
    }
    let (i, _) = chosen.ok_or_else(|| Error::param("every cell outside C is null"))?;

    let c = &cells[k - 1];
    let nu_a = nu(a);
    let nu_c = nu(c);
    let nu_a_c = nu(&a.intersection(c)?);
    let theta = params.theta.clone().unwrap_or_else(|| nu_c.clone());
    let factors = factors_for(i);
    let mut insensitive = true;
    for (j, f) in factors.iter().enumerate() {
        insensitive &= is_ij_insensitive(f, j as u8 + 1, k as u8)?;
    }
    let d = cells[i - 1].clone();
    let nu_d = nu(&d);
    let nu_a_d = nu(&a.intersection(&d)?);
    let bound = &base * &nu_d + delta * &theta / int(4 * k as u64);
    let precondition_met = gamma > &Rational::zero()
        && gamma <= &(delta / int(4))
        && nu_a >= base
        && nu_a_c <= delta / int(2) * &nu_c
        && theta > Rational::zero()
        && nu_c >= theta;
    Ok(Correlation {
        cells,
        chosen: i,
        factors,
        d,
        nu_a,
        nu_c,
        nu_a_c,
        nu_d,
        nu_a_d,
        theta,
        bound,
        precondition_met,
        insensitive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::CubeShape;
    use crate::increment::random_insensitive_set;
    use crate::measures::seeded_rng;
    use crate::rational::ratio;

    #[test]
    fn cells_partition_the_cube() {
        let s = CubeShape::new(3, 4).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let cs: Vec<CubeSet> =
                (1..3).map(|j| random_insensitive_set(s, j, 3, 0.5, &mut rng).unwrap()).collect();
            let a = CubeSet::random(s, 0.5, &mut rng);
            let params = CorrelationParams { delta: ratio(1, 2), gamma: ratio(1, 16), theta: None };
            let Ok(corr) = correlating_d(&a, &cs, &params) else { continue };
            let mut seen = CubeSet::empty(s);
            for cell in &corr.cells {
                assert_eq!(seen.intersection_len(cell), 0);
                seen = seen.union(cell).unwrap();
            }
            assert_eq!(seen, CubeSet::full(s));
            assert!(corr.insensitive);
        }
    }

    #[test]
    fn binary_case_compares_two_cells() {
        let s = CubeShape::new(2, 3).unwrap();
        let c1 = CubeSet::from_predicate(s, |d| d[0] == 1);
        let a = CubeSet::from_predicate(s, |d| d[0] == 2 && d[1] == 2);
        let params = CorrelationParams { delta: ratio(1, 4), gamma: ratio(1, 16), theta: None };
        let corr = correlating_d(&a, std::slice::from_ref(&c1), &params).unwrap();
        assert_eq!(corr.cells.len(), 2);
        assert_eq!(corr.cells[0], c1.complement());
        assert_eq!(corr.d, c1.complement());
    }

    /// When the hypotheses hold the inequality must follow. `A` is built to
    /// mostly avoid `C`, which makes `ν(A∩C) ≤ (δ/2)ν(C)` likely.
    #[test]
    fn inequality_when_preconditions_hold() {
        let s = CubeShape::new(3, 4).unwrap();
        let mut hits = 0;
        for seed in 0..300u64 {
            let mut rng = seeded_rng(seed);
            let cs: Vec<CubeSet> =
                (1..3).map(|j| random_insensitive_set(s, j, 3, 0.6, &mut rng).unwrap()).collect();
            let c = cs[0].intersection(&cs[1]).unwrap();
            let noise = CubeSet::random(s, 0.1, &mut rng);
            let a = CubeSet::random(s, 0.6, &mut rng).difference(&c).unwrap().union(&noise.intersection(&c).unwrap()).unwrap();
            let delta = crate::measures::equal_slices_measure(&a).into_inner();
            for gamma in [&delta / int(4), &delta / int(16)] {
                let params = CorrelationParams { delta: delta.clone(), gamma, theta: None };
                let Ok(corr) = correlating_d(&a, &cs, &params) else { continue };
                if corr.precondition_met {
                    hits += 1;
                    assert!(corr.inequality_holds(), "seed {seed}");
                }
            }
        }
        assert!(hits > 50, "only {hits} instances met the hypotheses");
    }
}
