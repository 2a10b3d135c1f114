use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::cube::{CubeShape, Point};
use crate::error::{Error, Result};
use crate::rational::{binomial, multinomial};

/// The value counts `(a_1, ..., a_k)` of a point; a slice of `[k]^n` is the
/// set of points sharing them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SliceVector {
    counts: Vec<usize>,
}

impl SliceVector {
    pub fn new(shape: CubeShape, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != shape.k() {
            return Err(Error::LengthMismatch { expected: shape.k(), got: counts.len() });
        }
        let total: usize = counts.iter().sum();
        if total != shape.n() {
            return Err(Error::param(format!("slice counts sum to {total}, expected {}", shape.n())));
        }
        Ok(SliceVector { counts })
    }

    pub fn of_point(p: &Point) -> Self {
        SliceVector { counts: p.value_counts() }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn is_degenerate(&self) -> bool {
        self.counts.contains(&0)
    }

    /// Number of points in the slice.
    pub fn size(&self) -> BigUint {
        multinomial(&self.counts)
    }

    /// All slices of `[k]^n` in lexicographic order of the counts.
    pub fn all(shape: CubeShape) -> Vec<SliceVector> {
        compositions(shape.n(), shape.k(), 0)
            .into_iter()
            .map(|counts| SliceVector { counts })
            .collect()
    }

    /// All slices with every count at least 1.
    pub fn nondegenerate(shape: CubeShape) -> Vec<SliceVector> {
        compositions(shape.n(), shape.k(), 1)
            .into_iter()
            .map(|counts| SliceVector { counts })
            .collect()
    }
}

/// `C(n+k-1, k-1)`.
pub fn slice_count(shape: CubeShape) -> BigUint {
    binomial((shape.n() + shape.k() - 1) as u64, (shape.k() - 1) as u64)
}

/// `C(n-1, k-1)`, zero when `n < k`.
pub fn nondegenerate_slice_count(shape: CubeShape) -> BigUint {
    if shape.n() < shape.k() {
        return BigUint::default();
    }
    binomial((shape.n() - 1) as u64, (shape.k() - 1) as u64)
}

/// Compositions of `n` into `parts` parts, each at least `min`, lexicographic.
pub(crate) fn compositions(n: usize, parts: usize, min: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, parts: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            if rest >= min {
                cur.push(rest);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let reserve = min * (parts - 1);
        if rest < reserve {
            return;
        }
        for a in min..=rest - reserve {
            cur.push(a);
            go(rest - a, parts - 1, min, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(n, parts, min, &mut Vec::with_capacity(parts), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(k: usize, n: usize) -> CubeShape {
        CubeShape::new(k, n).unwrap()
    }

    #[test]
    fn slice_counts() {
        assert_eq!(slice_count(shape(3, 2)), BigUint::from(6u32));
        assert_eq!(slice_count(shape(1, 7)), BigUint::from(1u32));
        assert_eq!(slice_count(shape(2, 3)), BigUint::from(4u32));
        assert_eq!(nondegenerate_slice_count(shape(3, 2)), BigUint::default());
        for k in 1..=4 {
            for n in 1..=6 {
                let s = shape(k, n);
                assert_eq!(BigUint::from(SliceVector::all(s).len()), slice_count(s));
                assert_eq!(BigUint::from(SliceVector::nondegenerate(s).len()), nondegenerate_slice_count(s));
                let total: BigUint = SliceVector::all(s).iter().map(|v| v.size()).sum();
                assert_eq!(total, BigUint::from(s.size()));
            }
        }
    }

    #[test]
    fn slice_of_point() {
        let s = shape(3, 5);
        let v = SliceVector::of_point(&Point::parse(s, "13313").unwrap());
        assert_eq!(v.counts(), &[2, 0, 3]);
        assert!(v.is_degenerate());
        assert_eq!(v.size(), BigUint::from(10u32));
        assert!(SliceVector::new(s, vec![1, 1, 1]).is_err());
    }
}
