use serde::{Deserialize, Serialize};

use super::line::LinePattern;
use super::point::Point;
use super::set::CubeSet;
use super::shape::CubeShape;
use super::subspace::Subspace;
use crate::error::{Error, Result};

/// Default cap on the number of encodings an exhaustive search may visit.
pub const DEFAULT_WORK_BUDGET: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub include_degenerate: bool,
    pub work_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { include_degenerate: false, work_budget: DEFAULT_WORK_BUDGET }
    }
}

impl SearchOptions {
    pub fn with_budget(work_budget: u64) -> Self {
        SearchOptions { work_budget, ..Default::default() }
    }

    /// Fails with [`Error::BudgetExceeded`] when `base^n` exceeds the budget.
    pub fn check(&self, base: usize, n: usize) -> Result<()> {
        let needed = (base as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if needed > self.work_budget as u128 {
            return Err(Error::BudgetExceeded { needed, budget: self.work_budget });
        }
        Ok(())
    }
}

/// Odometer over `[b]^n` that keeps the digit vector, for visiting encodings
/// in index order without division.
struct Odometer {
    base: u8,
    digits: Vec<u8>,
    started: bool,
}

impl Odometer {
    fn new(base: usize, n: usize) -> Self {
        Odometer { base: base as u8, digits: vec![1; n], started: false }
    }

    fn advance(&mut self) -> Option<&[u8]> {
        if !self.started {
            self.started = true;
            return Some(&self.digits);
        }
        for d in self.digits.iter_mut().rev() {
            if *d < self.base {
                *d += 1;
                return Some(&self.digits);
            }
            *d = 1;
        }
        None
    }
}

/// `(base, step)` index progressions of every line of `[k]^n`, in encoding order.
pub fn line_progressions(shape: CubeShape, include_degenerate: bool) -> Vec<(u64, u64)> {
    let k = shape.k();
    let weights = shape.weights();
    let mut out = Vec::new();
    let mut od = Odometer::new(k + 1, shape.n());
    while let Some(y) = od.advance() {
        let mut base = 0u64;
        let mut step = 0u64;
        for (c, &d) in y.iter().enumerate() {
            if d as usize == k + 1 {
                step += weights[c];
            } else {
                base += (d as u64 - 1) * weights[c];
            }
        }
        if step > 0 || include_degenerate {
            out.push((base, step));
        }
    }
    out
}

/// Every line pattern of `[k]^n` in encoding order.
pub fn all_lines(shape: CubeShape, include_degenerate: bool) -> Result<Vec<LinePattern>> {
    let big = shape.with_alphabet(shape.k() + 1)?;
    let mut out = Vec::new();
    for i in 0..big.size() {
        let l = LinePattern::from_point(&Point::from_index(big, i)?)?;
        if include_degenerate || !l.is_degenerate() {
            out.push(l);
        }
    }
    Ok(out)
}

fn progression_in(a: &CubeSet, base: u64, step: u64, k: u64) -> bool {
    (0..k).all(|j| a.contains_index(base + j * step))
}

/// The lexicographically least line (over the `[k+1]^n` encoding) inside `a`.
pub fn find_line_in_set(a: &CubeSet, opts: &SearchOptions) -> Result<Option<LinePattern>> {
    let shape = a.shape();
    opts.check(shape.k() + 1, shape.n())?;
    let k = shape.k();
    let weights = shape.weights();
    let mut od = Odometer::new(k + 1, shape.n());
    while let Some(y) = od.advance() {
        let mut base = 0u64;
        let mut step = 0u64;
        for (c, &d) in y.iter().enumerate() {
            if d as usize == k + 1 {
                step += weights[c];
            } else {
                base += (d as u64 - 1) * weights[c];
            }
        }
        if step == 0 && !opts.include_degenerate {
            continue;
        }
        if progression_in(a, base, step, k as u64) {
            let big = shape.with_alphabet(k + 1)?;
            let y = Point::new(big, y.to_vec())?;
            return Ok(Some(LinePattern::from_point(&y)?));
        }
    }
    Ok(None)
}

/// Number of nondegenerate lines lying entirely inside `a`.
pub fn count_lines_in_set(a: &CubeSet) -> u64 {
    let k = a.shape().k() as u64;
    line_progressions(a.shape(), false)
        .into_iter()
        .filter(|&(b, s)| progression_in(a, b, s, k))
        .count() as u64
}

pub fn is_line_free(a: &CubeSet) -> bool {
    let k = a.shape().k() as u64;
    line_progressions(a.shape(), false)
        .into_iter()
        .all(|(b, s)| !progression_in(a, b, s, k))
}

/// The lexicographically least `d`-dimensional subspace (over the `[k+d]^n`
/// encoding) all of whose points lie in `a`.
pub fn find_subspace_in_set(a: &CubeSet, d: usize, opts: &SearchOptions) -> Result<Option<Subspace>> {
    let shape = a.shape();
    if d == 0 {
        return Err(Error::param("subspace dimension must be at least 1"));
    }
    if d > shape.n() {
        return Err(Error::DimensionMismatch { expected: shape.n(), got: d });
    }
    opts.check(shape.k() + d, shape.n())?;
    let k = shape.k();
    let big = shape.with_alphabet(k + d)?;
    let weights = shape.weights();
    let domain = CubeShape::new(k, d)?;
    let mut offsets = vec![0u64; domain.size() as usize];
    let mut steps = vec![0u64; d];
    let mut od = Odometer::new(k + d, shape.n());
    while let Some(y) = od.advance() {
        let mut base = 0u64;
        steps.iter_mut().for_each(|s| *s = 0);
        for (c, &v) in y.iter().enumerate() {
            if v as usize > k {
                steps[v as usize - k - 1] += weights[c];
            } else {
                base += (v as u64 - 1) * weights[c];
            }
        }
        let degenerate = steps.contains(&0);
        if degenerate && !opts.include_degenerate {
            continue;
        }
        // offsets[z] = Σ_r (z_r - 1) steps[r], filled in index order of [k]^d
        let mut ok = true;
        for (zi, off) in offsets.iter_mut().enumerate() {
            let mut rest = zi as u64;
            let mut o = 0u64;
            for r in (0..d).rev() {
                o += (rest % k as u64) * steps[r];
                rest /= k as u64;
            }
            *off = o;
            if !a.contains_index(base + o) {
                ok = false;
                break;
            }
        }
        if ok {
            let code = Point::new(big, y.to_vec())?;
            return Ok(Some(Subspace::from_encoding(&code, k, opts.include_degenerate)?));
        }
    }
    Ok(None)
}

/// Does membership in `a` survive rewriting any `i` digit as `j` or vice versa?
///
/// Single-coordinate flips generate every rewriting of the `i`/`j` positions,
/// so checking them for each member suffices.
pub fn is_ij_insensitive(a: &CubeSet, i: u8, j: u8) -> Result<bool> {
    let shape = a.shape();
    let k = shape.k();
    for v in [i, j] {
        if v == 0 || v as usize > k {
            return Err(Error::param(format!("value {v} outside 1..={k}")));
        }
    }
    if i == j {
        return Err(Error::param("insensitivity needs two distinct values"));
    }
    let weights = shape.weights();
    let mut digits = vec![0u8; shape.n()];
    let delta = |from: u8, to: u8, w: u64, idx: u64| -> u64 {
        if to > from {
            idx + (to - from) as u64 * w
        } else {
            idx - (from - to) as u64 * w
        }
    };
    for x in a.iter() {
        shape.digits_into(x, &mut digits);
        for (c, &dg) in digits.iter().enumerate() {
            let other = if dg == i {
                j
            } else if dg == j {
                i
            } else {
                continue;
            };
            if !a.contains_index(delta(dg, other, weights[c], x)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(k: usize, n: usize) -> CubeShape {
        CubeShape::new(k, n).unwrap()
    }

    fn set(s: CubeShape, pts: &[&str]) -> CubeSet {
        let pts: Vec<Point> = pts.iter().map(|p| Point::parse(s, p).unwrap()).collect();
        CubeSet::from_points(s, &pts).unwrap()
    }

    #[test]
    fn one_dimensional_lines() {
        let s = shape(3, 1);
        let opts = SearchOptions::default();
        let full = CubeSet::full(s);
        assert_eq!(find_line_in_set(&full, &opts).unwrap().unwrap().to_string(), "*");
        assert!(find_line_in_set(&set(s, &["1", "2"]), &opts).unwrap().is_none());
    }

    #[test]
    fn degenerate_switch() {
        let s = shape(3, 2);
        let a = set(s, &["12"]);
        assert!(find_line_in_set(&a, &SearchOptions::default()).unwrap().is_none());
        let opts = SearchOptions { include_degenerate: true, ..Default::default() };
        assert_eq!(find_line_in_set(&a, &opts).unwrap().unwrap().to_string(), "12");
    }

    #[test]
    fn subspace_search() {
        let s = shape(2, 2);
        let v = find_subspace_in_set(&CubeSet::full(s), 2, &SearchOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(v, Subspace::identity(s));
        let m = shape(2, 4);
        let middle = CubeSet::from_predicate(m, |d| d.iter().filter(|&&x| x == 2).count() == 2);
        assert_eq!(middle.len(), 6);
        assert!(find_subspace_in_set(&middle, 1, &SearchOptions::default()).unwrap().is_none());
        assert!(find_subspace_in_set(&middle, 5, &SearchOptions::default()).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let a = CubeSet::full(shape(3, 10));
        let tight = SearchOptions::with_budget(1000);
        assert!(matches!(find_line_in_set(&a, &tight), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn insensitivity_examples() {
        let s = shape(3, 3);
        assert!(is_ij_insensitive(&CubeSet::full(s), 1, 2).unwrap());
        let first_is_one = CubeSet::from_predicate(s, |d| d[0] == 1);
        assert!(is_ij_insensitive(&first_is_one, 2, 3).unwrap());
        assert!(!is_ij_insensitive(&first_is_one, 1, 2).unwrap());

        let prefixes = ["11", "22", "23", "32", "33"];
        let pts: Vec<String> = prefixes
            .iter()
            .flat_map(|p| ["2", "3"].iter().map(move |t| format!("{p}{t}")))
            .collect();
        let refs: Vec<&str> = pts.iter().map(String::as_str).collect();
        let a = set(s, &refs);
        assert!(is_ij_insensitive(&a, 2, 3).unwrap());
        let drop = CubeSet::from_predicate(s, |d| matches!((d[0], d[1]), (1, 1) | (2, 2) | (3, 3)));
        let b = a.difference(&drop).unwrap();
        assert!(!is_ij_insensitive(&b, 2, 3).unwrap());
    }
}
