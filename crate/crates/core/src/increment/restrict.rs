use itertools::Itertools;
use num_traits::Zero;
use rand::seq::index::sample;
use serde::Serialize;

use super::EmbeddingSpec;
use crate::cube::{CubeSet, CubeShape, Subspace};
use crate::error::{Error, Result};
use crate::measures::{equal_slices_measure, sample_equal_slices, seeded_rng, uniform_measure};
use crate::rational::{int, serde_ratio, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictParams {
    pub delta: Rational,
    pub gamma: Rational,
    pub beta: Rational,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Restriction {
    pub spec: EmbeddingSpec,
    pub subspace: Subspace,
    /// `μ_V(D∩V)`.
    #[serde(with = "serde_ratio")]
    pub mu_d: Rational,
    /// `μ_V(A∩D∩V)`.
    #[serde(with = "serde_ratio")]
    pub mu_a_d: Rational,
    /// `μ_V(D∩V) ≥ γ` and `μ_V(A∩D∩V) ≥ (δ-γ)μ_V(D∩V) + β`.
    pub meets: bool,
    pub examined: u64,
    pub exhaustive: bool,
    /// `r ≤ min(βm/8k, βm/2k²)` and `ν(A∩D) ≥ (δ-γ)ν(D) + 3β`.
    pub precondition_met: bool,
}

impl Restriction {
    /// Recounts both densities directly on the subspace's points.
    pub fn replay(&self, a: &CubeSet, d: &CubeSet) -> Result<bool> {
        let pts = self.subspace.point_indices();
        let total = int(pts.len() as u64);
        let in_d = pts.iter().filter(|&&i| d.contains_index(i)).count() as u64;
        let in_ad = pts.iter().filter(|&&i| d.contains_index(i) && a.contains_index(i)).count() as u64;
        Ok(int(in_d) / &total == self.mu_d && int(in_ad) / total == self.mu_a_d)
    }
}

/// Either every pair `(J, y)` in order (`None`), or this many draws with `J`
/// uniform and `y` from equal-slices measure.
pub type RestrictSampling = Option<(u64, u64)>;

/// Finds an `r`-dimensional `S_{J,y}` on which `D` keeps uniform density at
/// least `γ` and `A` stays overrepresented inside `D` by `β`. Returns the
/// first pair meeting both thresholds, or else the one with the largest
/// excess `μ_V(A∩D∩V) - (δ-γ)μ_V(D∩V)`.
pub fn restrict_to_uniform(
    a: &CubeSet,
    d: &CubeSet,
    params: &RestrictParams,
    sampling: RestrictSampling,
) -> Result<Restriction> {
    let shape = a.shape();
    let (k, m) = (shape.k(), shape.n());
    let r = params.r;
    if r == 0 || r > m {
        return Err(Error::param(format!("need 1 <= r <= m, got r = {r}, m = {m}")));
    }
    if d.shape() != shape {
        return Err(Error::ShapeMismatch("D must live in the same cube as A".into()));
    }
    let base = &params.delta - &params.gamma;
    let ad = a.intersection(d)?;
    let nu_d = equal_slices_measure(d).into_inner();
    let nu_ad = equal_slices_measure(&ad).into_inner();
    let beta_m = &params.beta * int(m as u64);
    let precondition_met = int(r as u64) <= &beta_m / int(8 * k as u64)
        && int(r as u64) <= &beta_m / int(2 * (k * k) as u64)
        && nu_ad >= &base * &nu_d + int(3) * &params.beta;

    let tail = m - r;
    let tail_shape = if tail > 0 { Some(CubeShape::new(k, tail)?) } else { None };
    let mut best: Option<(bool, Rational, Restriction)> = None;
    let mut examined = 0u64;
    let mut visit = |spec: EmbeddingSpec| -> Result<bool> {
        examined += 1;
        let v = spec.subspace(shape)?;
        let mu_d = uniform_measure(&v.pullback(d)?).into_inner();
        let mu_a_d = uniform_measure(&v.pullback(&ad)?).into_inner();
        let excess = &mu_a_d - &base * &mu_d - &params.beta;
        let meets = mu_d >= params.gamma && excess >= Rational::zero();
        let better = match &best {
            None => true,
            Some((bm, be, _)) => (meets && !bm) || (meets == *bm && excess > *be),
        };
        if better {
            let rec = Restriction {
                spec,
                subspace: v,
                mu_d,
                mu_a_d,
                meets,
                examined: 0,
                exhaustive: false,
                precondition_met,
            };
            best = Some((meets, excess, rec));
        }
        Ok(meets)
    };

    let exhaustive = sampling.is_none();
    match sampling {
        None => {
            'outer: for j in (0..m).combinations(r) {
                for yi in 0..tail_shape.map_or(1, |s| s.size()) {
                    let y = tail_shape.map_or_else(Vec::new, |s| s.digits_of(yi));
                    if visit(EmbeddingSpec { j: j.clone(), y })? {
                        break 'outer;
                    }
                }
            }
        }
        Some((samples, seed)) => {
            let mut rng = seeded_rng(seed);
            for _ in 0..samples {
                let mut j = sample(&mut rng, m, r).into_vec();
                j.sort_unstable();
                let y = tail_shape.map_or_else(Vec::new, |s| sample_equal_slices(s, &mut rng).digits().to_vec());
                if visit(EmbeddingSpec { j, y })? {
                    break;
                }
            }
        }
    }
    let (_, _, mut rec) = best.expect("at least one pair is visited");
    rec.examined = examined;
    rec.exhaustive = exhaustive;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::seeded_rng;
    use crate::rational::ratio;

    #[test]
    fn full_d_reduces_to_density_of_a() {
        let s = CubeShape::new(3, 4).unwrap();
        let mut rng = seeded_rng(2);
        let a = CubeSet::random(s, 0.7, &mut rng);
        let params = RestrictParams { delta: ratio(1, 2), gamma: ratio(1, 10), beta: ratio(1, 10), r: 2 };
        let out = restrict_to_uniform(&a, &CubeSet::full(s), &params, None).unwrap();
        assert_eq!(out.mu_d, int(1));
        assert!(out.meets);
        assert!(out.replay(&a, &CubeSet::full(s)).unwrap());
    }

    #[test]
    fn planted_subspace_is_found() {
        // A is exactly a planted 2-dimensional S_{J,y}; D is everything
        let s = CubeShape::new(3, 5).unwrap();
        let planted = EmbeddingSpec::new(s, vec![1, 3], vec![2, 1, 3]).unwrap();
        let v = planted.subspace(s).unwrap();
        let a = v.to_set();
        let d = CubeSet::full(s);
        let params = RestrictParams { delta: ratio(1, 2), gamma: ratio(1, 4), beta: ratio(1, 4), r: 2 };
        let out = restrict_to_uniform(&a, &d, &params, None).unwrap();
        assert!(out.meets);
        assert_eq!(out.spec, planted);
        assert_eq!(out.mu_a_d, int(1));
    }

    #[test]
    fn sampled_results_replay() {
        let s = CubeShape::new(3, 6).unwrap();
        let mut rng = seeded_rng(7);
        let a = CubeSet::random(s, 0.5, &mut rng);
        let d = CubeSet::random(s, 0.5, &mut rng);
        let params = RestrictParams { delta: ratio(1, 2), gamma: ratio(1, 10), beta: ratio(1, 2), r: 3 };
        let out = restrict_to_uniform(&a, &d, &params, Some((200, 11))).unwrap();
        assert!(!out.exhaustive && out.examined == 200);
        assert!(out.replay(&a, &d).unwrap());
    }
}
