use itertools::Itertools;
use num_traits::Zero;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::restrict_lower;
use crate::cube::{CubeSet, CubeShape, Subspace};
use crate::error::{Error, Result};
use crate::measures::{equal_slices_measure, seeded_rng, uniform_measure};
use crate::rational::{binomial, int, pow_ratio, serde_ratio, Rational};

/// A coordinate set `J` of size `m` together with a point `y` on the other
/// coordinates; `S_{J,y}` is the `m`-dimensional subspace obtained by letting
/// the coordinates of `J` vary, and `S'_{J,y}` its points whose `J`
/// coordinates avoid `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    /// 0-based, increasing.
    pub j: Vec<usize>,
    /// Digits of `y` on the complement of `J`, in coordinate order.
    pub y: Vec<u8>,
}

impl EmbeddingSpec {
    pub fn new(shape: CubeShape, mut j: Vec<usize>, y: Vec<u8>) -> Result<Self> {
        j.sort_unstable();
        j.dedup();
        if j.is_empty() || j.last().is_some_and(|&c| c >= shape.n()) {
            return Err(Error::param("J must be a nonempty set of coordinates"));
        }
        if j.len() + y.len() != shape.n() {
            return Err(Error::LengthMismatch { expected: shape.n() - j.len(), got: y.len() });
        }
        if y.iter().any(|&v| v == 0 || v as usize > shape.k()) {
            return Err(Error::param("y has a digit outside [k]"));
        }
        Ok(EmbeddingSpec { j, y })
    }

    pub fn m(&self) -> usize {
        self.j.len()
    }

    pub fn subspace(&self, shape: CubeShape) -> Result<Subspace> {
        Subspace::with_free_coordinates(shape, &self.j, &self.y)
    }
}

/// Equal-slices density of `a` in `S_{J,y}` (over `[k]^m`) and in
/// `S'_{J,y}` (over `[k-1]^m`).
pub fn local_densities(a: &CubeSet, spec: &EmbeddingSpec) -> Result<(Rational, Rational)> {
    let local = spec.subspace(a.shape())?.pullback(a)?;
    let full = equal_slices_measure(&local).into_inner();
    let lower = equal_slices_measure(&restrict_lower(&local)?).into_inner();
    Ok((full, lower))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalCase {
    /// Density at least `δ + η` in `S_{J,y}`.
    Increment,
    /// Density at least `δ - 4η/δ` in `S_{J,y}` and at least `δ/4` in `S'_{J,y}`.
    Diagonal,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalCandidate {
    pub spec: EmbeddingSpec,
    pub subspace: Subspace,
    #[serde(with = "serde_ratio")]
    pub density: Rational,
    #[serde(with = "serde_ratio")]
    pub density_lower: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalOutcome {
    pub case: DiagonalCase,
    /// The pair realizing `case`, absent when exhausted.
    pub candidate: Option<DiagonalCandidate>,
    /// The examined pair with the largest density in `S_{J,y}`.
    pub best: Option<DiagonalCandidate>,
    /// Uniform density of the input.
    #[serde(with = "serde_ratio")]
    pub delta: Rational,
    #[serde(with = "serde_ratio")]
    pub eta: Rational,
    #[serde(with = "serde_ratio")]
    pub increment_threshold: Rational,
    #[serde(with = "serde_ratio")]
    pub diagonal_threshold: Rational,
    #[serde(with = "serde_ratio")]
    pub lower_threshold: Rational,
    pub examined: u64,
    pub exhaustive: bool,
    /// `0 < η ≤ δ/4`, `m^4 ≤ n` and `n ≥ (16k/η)^12`.
    pub precondition_met: bool,
}

/// How `(J, y)` pairs are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagonalSearch {
    /// Exhaust every pair when `C(n,m) k^{n-m}` is at most this.
    pub budget: u64,
    /// Otherwise draw this many pairs, `J` and `y` uniform.
    pub samples: u64,
    pub seed: u64,
}

impl Default for DiagonalSearch {
    fn default() -> Self {
        DiagonalSearch { budget: 1 << 16, samples: 4096, seed: 0 }
    }
}

/// Looks for `(J, y)` with either a density increment on `S_{J,y}` or a dense
/// diagonal: density not much below `δ` on `S_{J,y}` and at least `δ/4` on
/// `S'_{J,y}`. Increments take priority; within a case the first pair in
/// visiting order wins.
pub fn dense_diagonal(a: &CubeSet, m: usize, eta: &Rational, search: &DiagonalSearch) -> Result<DiagonalOutcome> {
    let shape = a.shape();
    let (k, n) = (shape.k(), shape.n());
    if m == 0 || m > n {
        return Err(Error::param(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if k < 2 {
        return Err(Error::param("dense diagonals need k >= 2"));
    }
    let delta = uniform_measure(a).into_inner();
    let mut out = DiagonalOutcome {
        case: DiagonalCase::Exhausted,
        candidate: None,
        best: None,
        increment_threshold: &delta + eta,
        diagonal_threshold: if delta.is_zero() { Rational::zero() } else { &delta - int(4) * eta / &delta },
        lower_threshold: &delta / int(4),
        precondition_met: eta > &Rational::zero()
            && eta <= &(&delta / int(4))
            && m.pow(4) <= n
            && pow_ratio(&(int(16 * k as u64) / eta), 12) <= int(n as u64),
        delta,
        eta: eta.clone(),
        examined: 0,
        exhaustive: false,
    };
    if out.delta.is_zero() {
        return Ok(out);
    }

    let tail = n - m;
    let total = binomial(n as u64, m as u64) * num_bigint::BigUint::from(k).pow(tail as u32);
    let tail_shape = if tail > 0 { Some(CubeShape::new(k, tail)?) } else { None };
    let tail_size = tail_shape.map_or(1, |s| s.size());
    let y_of = |i: u64| tail_shape.map_or_else(Vec::new, |s| s.digits_of(i));

    let mut first_increment = None;
    let mut first_diagonal = None;
    let mut visit = |j: Vec<usize>, y: Vec<u8>, out: &mut DiagonalOutcome| -> Result<()> {
        let spec = EmbeddingSpec { j, y };
        let (density, density_lower) = local_densities(a, &spec)?;
        out.examined += 1;
        let cand = || -> Result<DiagonalCandidate> {
            Ok(DiagonalCandidate {
                subspace: spec.subspace(shape)?,
                spec: spec.clone(),
                density: density.clone(),
                density_lower: density_lower.clone(),
            })
        };
        if first_increment.is_none() && density >= out.increment_threshold {
            first_increment = Some(cand()?);
        }
        if first_diagonal.is_none() && density >= out.diagonal_threshold && density_lower >= out.lower_threshold {
            first_diagonal = Some(cand()?);
        }
        if out.best.as_ref().is_none_or(|b| density > b.density) {
            out.best = Some(cand()?);
        }
        Ok(())
    };

    if total <= num_bigint::BigUint::from(search.budget) {
        out.exhaustive = true;
        for j in (0..n).combinations(m) {
            for yi in 0..tail_size {
                visit(j.clone(), y_of(yi), &mut out)?;
            }
        }
    } else {
        let mut rng = seeded_rng(search.seed);
        for _ in 0..search.samples {
            let mut j = sample(&mut rng, n, m).into_vec();
            j.sort_unstable();
            let yi = rng.random_range(0..tail_size);
            visit(j, y_of(yi), &mut out)?;
        }
    }
    if let Some(c) = first_increment {
        out.case = DiagonalCase::Increment;
        out.candidate = Some(c);
    } else if let Some(c) = first_diagonal {
        out.case = DiagonalCase::Diagonal;
        out.candidate = Some(c);
    }
    Ok(out)
}

impl DiagonalOutcome {
    /// Re-derives the candidate's densities and checks them against its case.
    pub fn replay(&self, a: &CubeSet) -> Result<bool> {
        let Some(c) = &self.candidate else {
            return Ok(self.case == DiagonalCase::Exhausted);
        };
        let (d, dl) = local_densities(a, &c.spec)?;
        let consistent = d == c.density && dl == c.density_lower;
        Ok(consistent
            && match self.case {
                DiagonalCase::Increment => d >= self.increment_threshold,
                DiagonalCase::Diagonal => d >= self.diagonal_threshold && dl >= self.lower_threshold,
                DiagonalCase::Exhausted => false,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn shape(k: usize, n: usize) -> CubeShape {
        CubeShape::new(k, n).unwrap()
    }

    #[test]
    fn full_cube_gives_a_diagonal() {
        let s = shape(3, 4);
        let out = dense_diagonal(&CubeSet::full(s), 2, &ratio(1, 8), &DiagonalSearch::default()).unwrap();
        assert_eq!(out.case, DiagonalCase::Diagonal);
        let c = out.candidate.as_ref().unwrap();
        assert_eq!((c.density.clone(), c.density_lower.clone()), (int(1), int(1)));
        assert!(out.exhaustive && out.replay(&CubeSet::full(s)).unwrap());
    }

    #[test]
    fn empty_set_is_exhausted() {
        let out = dense_diagonal(&CubeSet::empty(shape(3, 3)), 1, &ratio(1, 8), &DiagonalSearch::default()).unwrap();
        assert_eq!(out.case, DiagonalCase::Exhausted);
        assert!(out.candidate.is_none());
    }

    /// Brute-force oracle: every pair, densities straight from point masses.
    fn oracle(a: &CubeSet, m: usize, eta: &Rational) -> (bool, bool) {
        let s = a.shape();
        let delta = ratio(a.len(), s.size());
        let (mut inc, mut diag) = (false, false);
        for j in (0..s.n()).combinations(m) {
            let rest: Vec<usize> = (0..s.n()).filter(|c| !j.contains(c)).collect();
            let tail = s.k().pow(rest.len() as u32);
            for yi in 0..tail {
                let mut y = vec![0u8; rest.len()];
                let mut t = yi;
                for c in (0..rest.len()).rev() {
                    y[c] = (t % s.k()) as u8 + 1;
                    t /= s.k();
                }
                let local = shape(s.k(), m);
                let (mut d, mut dl) = (Rational::zero(), Rational::zero());
                for xi in 0..local.size() {
                    let x = local.digits_of(xi);
                    let mut z = vec![0u8; s.n()];
                    for (r, &c) in j.iter().enumerate() {
                        z[c] = x[r];
                    }
                    for (r, &c) in rest.iter().enumerate() {
                        z[c] = y[r];
                    }
                    if a.contains_index(s.index_of(&z)) {
                        let counts = crate::cube::Point::new(local, x.clone()).unwrap().value_counts();
                        d += crate::measures::equal_slices_prob_counts(&counts);
                        if !x.contains(&(s.k() as u8)) {
                            dl += crate::measures::equal_slices_prob_counts(&counts[..s.k() - 1]);
                        }
                    }
                }
                inc |= d >= &delta + eta;
                diag |= d >= &delta - int(4) * eta / &delta && dl >= &delta / int(4);
            }
        }
        (inc, diag)
    }

    #[test]
    fn diagonal_set_matches_oracle() {
        // points whose 3s sit exactly on a fixed coordinate set Z
        for n in 3..=5 {
            let s = shape(3, n);
            let z = [0usize, 2];
            let a = CubeSet::from_predicate(s, |d| (0..n).all(|c| (d[c] == 3) == z.contains(&c)));
            let eta = ratio(1, 64);
            let out = dense_diagonal(&a, 2, &eta, &DiagonalSearch::default()).unwrap();
            let (inc, diag) = oracle(&a, 2, &eta);
            match out.case {
                DiagonalCase::Increment => assert!(inc),
                DiagonalCase::Diagonal => assert!(!inc && diag),
                DiagonalCase::Exhausted => assert!(!inc && !diag),
            }
            assert_ne!(out.case, DiagonalCase::Exhausted);
            assert!(out.replay(&a).unwrap());
        }
    }

    #[test]
    fn sampled_mode_is_deterministic() {
        let s = shape(3, 6);
        let mut rng = seeded_rng(9);
        let a = CubeSet::random(s, 0.6, &mut rng);
        let search = DiagonalSearch { budget: 10, samples: 50, seed: 5 };
        let x = dense_diagonal(&a, 2, &ratio(1, 20), &search).unwrap();
        let y = dense_diagonal(&a, 2, &ratio(1, 20), &search).unwrap();
        assert_eq!(x, y);
        assert!(!x.exhaustive && x.examined == 50);
        assert!(x.replay(&a).unwrap());
    }
}
