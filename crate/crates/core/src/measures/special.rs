use std::collections::BTreeMap;

use num_traits::Zero;

use super::distribution::Distribution;
use super::equal_slices::nondegenerate_prob_counts;
use crate::cube::{value_counts, CubeShape};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Exact law of `x` when a special `d`-dimensional subspace is drawn with
/// its `[d]^n` encoding non-degenerate equal-slices distributed, and then a
/// point of the subspace is drawn with its `[k]^d` parameter non-degenerate
/// equal-slices distributed.
///
/// The second draw needs a non-degenerate point of `[k]^d`, so `d < k` is
/// rejected: that law has empty support.
pub fn special_composition(shape: CubeShape, d: usize) -> Result<Distribution> {
    Distribution::new(shape, special_composition_with(shape, d, nondegenerate_prob_counts)?)
}

/// Point masses of [`special_composition`] with the point law (by value
/// counts) supplied, used for both the encoding and the parameter draw. The
/// masses are not checked to sum to 1.
pub fn special_composition_with(
    shape: CubeShape,
    d: usize,
    law: impl Fn(&[usize]) -> Rational,
) -> Result<BTreeMap<u64, Rational>> {
    let (k, n) = (shape.k(), shape.n());
    if d == 0 || d > n {
        return Err(Error::param(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
    }
    if d < k {
        return Err(Error::param(format!(
            "no non-degenerate point of [{k}]^{d}: a point in a special subspace of dimension {d} < k cannot use all {k} values"
        )));
    }
    let codes = CubeShape::new(d, n)?;
    let params = CubeShape::new(k, d)?;
    let param_law: Vec<(Vec<u8>, Rational)> = (0..params.size())
        .map(|w| params.digits_of(w))
        .map(|w| {
            let p = law(&value_counts(&w, k));
            (w, p)
        })
        .filter(|(_, p)| !p.is_zero())
        .collect();
    let mut probs = vec![Rational::zero(); shape.size() as usize];
    let mut x = vec![0u8; n];
    let mut z = vec![0u8; n];
    for code in 0..codes.size() {
        codes.digits_into(code, &mut z);
        let pz = law(&value_counts(&z, d));
        if pz.is_zero() {
            continue;
        }
        for (w, pw) in &param_law {
            for (xi, &zi) in x.iter_mut().zip(&z) {
                *xi = w[zi as usize - 1];
            }
            probs[shape.index_of(&x) as usize] += &pz * pw;
        }
    }
    Ok(probs.into_iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(i, p)| (i as u64, p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{big, multinomial};

    #[test]
    fn matches_nondegenerate_law_when_d_at_least_k() {
        for (k, d, n) in [(2, 2, 4), (2, 2, 5), (2, 3, 5), (3, 3, 6), (3, 4, 7)] {
            let s = CubeShape::new(k, n).unwrap();
            let composed = special_composition(s, d).unwrap();
            assert_eq!(composed, Distribution::nondegenerate_equal_slices(s).unwrap(), "k={k} d={d} n={n}");
        }
    }

    #[test]
    fn small_d_has_no_parameter_law() {
        let s = CubeShape::new(3, 5).unwrap();
        assert!(special_composition(s, 1).is_err());
        assert!(special_composition(s, 2).is_err());
    }

    #[test]
    fn tampered_law_is_detected() {
        let s = CubeShape::new(2, 5).unwrap();
        let skewed = |c: &[usize]| {
            let mut r = nondegenerate_prob_counts(c);
            if !r.is_zero() {
                // multinomial off by one
                r = r * big(&multinomial(c)) / (big(&multinomial(c)) + Rational::from_integer(1.into()));
            }
            r
        };
        let composed = special_composition_with(s, 2, skewed).unwrap();
        assert_ne!(&composed, Distribution::nondegenerate_equal_slices(s).unwrap().probs());
    }
}
