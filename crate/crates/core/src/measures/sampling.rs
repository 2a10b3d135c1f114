use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cube::{CubeShape, Point, Subspace};
use crate::error::{Error, Result};

/// The generator used everywhere a seed is accepted.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniformly random point of the slice with value counts `counts`.
pub fn sample_in_slice<R: Rng + ?Sized>(shape: CubeShape, counts: &[usize], rng: &mut R) -> Point {
    let mut digits: Vec<u8> = counts
        .iter()
        .enumerate()
        .flat_map(|(j, &a)| std::iter::repeat_n(j as u8 + 1, a))
        .collect();
    digits.shuffle(rng);
    Point::new(shape, digits).expect("counts sum to n")
}

/// Gap sizes between `k - 1` sorted pegs placed among `n + k - 1` slots.
fn gaps_from_pegs(mut pegs: Vec<usize>, slots: usize) -> Vec<usize> {
    pegs.sort_unstable();
    let mut counts = Vec::with_capacity(pegs.len() + 1);
    let mut prev = 0usize;
    for p in pegs {
        counts.push(p - prev - 1);
        prev = p;
    }
    counts.push(slots + 1 - prev - 1);
    counts
}

/// Equal-slices sample by the pegs construction: `k - 1` pegs among
/// `{1, ..., n+k-1}` fix the slice, then a uniform point of that slice.
pub fn sample_equal_slices<R: Rng + ?Sized>(shape: CubeShape, rng: &mut R) -> Point {
    let (n, k) = (shape.n(), shape.k());
    let slots = n + k - 1;
    let pegs: Vec<usize> = index::sample(rng, slots, k - 1).into_iter().map(|p| p + 1).collect();
    let counts = gaps_from_pegs(pegs, slots);
    sample_in_slice(shape, &counts, rng)
}

/// Non-degenerate equal-slices sample by the pegs construction restricted to
/// positive gaps: `k - 1` cuts among the `n - 1` interior positions.
pub fn sample_nondegenerate_pegs<R: Rng + ?Sized>(shape: CubeShape, rng: &mut R) -> Result<Point> {
    let (n, k) = (shape.n(), shape.k());
    if n < k {
        return Err(Error::param("non-degenerate sampling needs n >= k"));
    }
    let mut cuts: Vec<usize> = index::sample(rng, n - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut counts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts {
        counts.push(c - prev);
        prev = c;
    }
    counts.push(n - prev);
    Ok(sample_in_slice(shape, &counts, rng))
}

/// Non-degenerate equal-slices sample by the circle construction: coordinates
/// sit around a circle in random order, `k` labelled markers occupy distinct
/// gaps, and each coordinate takes the label of the first marker clockwise.
pub fn sample_nondegenerate<R: Rng + ?Sized>(shape: CubeShape, rng: &mut R) -> Result<Point> {
    let (n, k) = (shape.n(), shape.k());
    if n < k {
        return Err(Error::param("non-degenerate sampling needs n >= k"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels: Vec<u8> = (1..=k as u8).collect();
    labels.shuffle(rng);
    // gap g sits just after circle position g
    let mut marker = vec![0u8; n];
    for (g, &lab) in index::sample(rng, n, k).into_iter().zip(&labels) {
        marker[g] = lab;
    }
    let mut digits = vec![0u8; n];
    let mut next = 0u8;
    for step in 0..2 * n {
        let p = 2 * n - 1 - step;
        let pos = p % n;
        if marker[pos] != 0 {
            next = marker[pos];
        }
        if p < n {
            digits[order[pos]] = next;
        }
    }
    Point::new(shape, digits)
}

/// A special `d`-dimensional subspace (no fixed coordinates) whose `[d]^n`
/// encoding is non-degenerate equal-slices distributed.
pub fn sample_special_subspace<R: Rng + ?Sized>(shape: CubeShape, d: usize, rng: &mut R) -> Result<Subspace> {
    if d == 0 || d > shape.n() {
        return Err(Error::DimensionMismatch { expected: shape.n(), got: d });
    }
    let code_shape = CubeShape::new(d, shape.n())?;
    let code = sample_nondegenerate(code_shape, rng)?;
    Subspace::special_from_point(shape, &code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Distribution;
    use std::collections::HashMap;

    fn shape(k: usize, n: usize) -> CubeShape {
        CubeShape::new(k, n).unwrap()
    }

    fn empirical(samples: u64, mut f: impl FnMut() -> Point) -> HashMap<u64, u64> {
        let mut h = HashMap::new();
        for _ in 0..samples {
            *h.entry(f().index()).or_insert(0) += 1;
        }
        h
    }

    #[test]
    fn single_coordinate_is_uniform() {
        let s = shape(3, 1);
        let mut rng = seeded_rng(1);
        let h = empirical(30_000, || sample_equal_slices(s, &mut rng));
        assert_eq!(h.len(), 3);
        for c in h.values() {
            assert!((*c as f64 - 10_000.0).abs() < 600.0);
        }
    }

    #[test]
    fn samplers_match_exact_laws() {
        let s = shape(3, 4);
        let samples = 200_000;
        let mut rng = seeded_rng(7);
        let es = Distribution::equal_slices(s);
        let h = empirical(samples, || sample_equal_slices(s, &mut rng));
        assert!(es.tv_to_empirical(&h, samples) < 0.02);
        let nd = Distribution::nondegenerate_equal_slices(s).unwrap();
        let h = empirical(samples, || sample_nondegenerate(s, &mut rng).unwrap());
        assert!(nd.tv_to_empirical(&h, samples) < 0.02);
        let h = empirical(samples, || sample_nondegenerate_pegs(s, &mut rng).unwrap());
        assert!(nd.tv_to_empirical(&h, samples) < 0.02);
    }

    #[test]
    fn nondegenerate_never_misses_a_value() {
        let s = shape(3, 5);
        let mut rng = seeded_rng(5);
        for _ in 0..20_000 {
            let x = sample_nondegenerate(s, &mut rng).unwrap();
            assert!(x.value_counts().iter().all(|&c| c > 0));
        }
        assert!(sample_nondegenerate(shape(3, 2), &mut rng).is_err());
    }

    #[test]
    fn special_subspaces() {
        let s = shape(3, 5);
        let mut rng = seeded_rng(9);
        let v = sample_special_subspace(s, 1, &mut rng).unwrap();
        assert_eq!(v.wildcard_sets(), vec![vec![0, 1, 2, 3, 4]]);
        let w = sample_special_subspace(s, 5, &mut rng).unwrap();
        assert!(w.wildcard_sets().iter().all(|set| set.len() == 1));
        assert!(w.fixed().is_empty());
        assert!(sample_special_subspace(s, 6, &mut rng).is_err());
    }
}
