use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;

use crate::cube::{find_subspace_in_set, is_ij_insensitive, CubeSet, CubeShape, SearchOptions, Slot, Subspace};
use crate::error::{Error, Result};
use crate::measures::uniform_measure;
use crate::rational::{int, pow_ratio, serde_ratio, Rational};

/// Subspace dimension and block length for one round of partitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartitionLevel {
    pub dim: usize,
    pub m: usize,
}

impl PartitionLevel {
    /// `m = dim`: each block must be filled completely, which partitions a
    /// full cube exactly.
    pub fn exact(dim: usize) -> Self {
        PartitionLevel { dim, m: dim }
    }

    /// One level per insensitive set, outermost first, with dimensions
    /// stepping down evenly from `n` to `dim`.
    pub fn schedule(n: usize, sets: usize, dim: usize) -> Vec<PartitionLevel> {
        let mut cur = n;
        (0..sets)
            .map(|i| {
                let left = sets - i;
                let next = if left == 1 { dim } else { dim + cur.saturating_sub(dim) / left };
                cur = next;
                PartitionLevel::exact(next)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionResult {
    pub subspaces: Vec<Subspace>,
    pub residual: CubeSet,
    /// Uniform density of the input.
    #[serde(with = "serde_ratio")]
    pub input_density: Rational,
    /// Uniform density of the union of the subspaces.
    #[serde(with = "serde_ratio")]
    pub covered_density: Rational,
    /// Largest loss `μ(D) - μ(⋃V_i)` the lemma allows, when `η` was given.
    pub allowed_loss: Option<String>,
    /// The lemma's size conditions on `m` and `n`; false without `η`.
    pub precondition_met: bool,
    /// False when the work budget cut the procedure short.
    pub complete: bool,
}

impl PartitionResult {
    /// Disjointness, containment, dimension and exact residual accounting.
    pub fn check(&self, input: &CubeSet, dim: usize) -> bool {
        let mut union = CubeSet::empty(input.shape());
        for v in &self.subspaces {
            let pts = v.to_set();
            if v.dim() != dim || v.shape() != input.shape() || !pts.is_subset(input) || union.intersection_len(&pts) > 0 {
                return false;
            }
            union = union.union(&pts).expect("same shape");
        }
        let expected = input.difference(&union).expect("same shape");
        self.residual == expected && self.covered_density == uniform_measure(&union).into_inner()
    }

    /// `μ(⋃V_i) ≥ μ(D) - allowed_loss`, meaningful only under the
    /// preconditions.
    pub fn bound_holds(&self) -> Option<bool> {
        let loss = crate::rational::parse_ratio(self.allowed_loss.as_ref()?).ok()?;
        Some(self.covered_density >= &self.input_density - loss)
    }
}

/// Are the fibers `{z : (x, z) in set}` over each prefix `x` of length
/// `prefix` all `ij`-insensitive?
pub fn fibers_insensitive(set: &CubeSet, prefix: usize, i: u8, j: u8) -> Result<bool> {
    let shape = set.shape();
    if prefix >= shape.n() {
        return Ok(true);
    }
    let tail = CubeShape::new(shape.k(), shape.n() - prefix)?;
    let kt = tail.size();
    for x in 0..shape.size() / kt {
        let fiber = CubeSet::from_indices(tail, (0..kt).filter(|&z| set.contains_index(x * kt + z)))?;
        if !is_ij_insensitive(&fiber, i, j)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Partitions most of a `1k`-insensitive set into `dim`-dimensional
/// subspaces.
pub fn partition_insensitive(d: &CubeSet, dim: usize, m: usize) -> Result<PartitionResult> {
    partition_insensitive_with(d, 1, PartitionLevel { dim, m }, None, crate::cube::DEFAULT_WORK_BUDGET)
}

/// The `jk`-insensitive version, with an optional `η` for the size
/// conditions and a budget on subspace-search work.
///
/// Coordinates are cut into blocks of length `m`. In round `r` the points are
/// written `(x, y, z)` with `x` the first `r` blocks, `y` block `r` and `z` the
/// rest. For each prefix `x` and each `z`, a `dim`-dimensional subspace is
/// looked for in `{y in [k-1]^m : (x,y,z) in D}`; insensitivity lets its
/// wildcards take the value `k` as well. Among these candidates the `U` with
/// the most `z` satisfying `{x} × U × {z} ⊆ D` is removed for all such `z`.
/// The remaining fibers over `(x, y)` stay insensitive, so the next block
/// can be processed the same way.
pub fn partition_insensitive_with(
    d: &CubeSet,
    j: u8,
    level: PartitionLevel,
    eta: Option<&Rational>,
    budget: u64,
) -> Result<PartitionResult> {
    let shape = d.shape();
    let (k, n) = (shape.k(), shape.n());
    let PartitionLevel { dim, m } = level;
    if k < 2 || j == 0 || j as usize >= k {
        return Err(Error::param(format!("need 1 <= j < k, got j = {j}, k = {k}")));
    }
    if dim == 0 || dim > m || m > n {
        return Err(Error::param(format!("need 1 <= dim <= m <= n, got dim = {dim}, m = {m}, n = {n}")));
    }
    if !is_ij_insensitive(d, j, k as u8)? {
        return Err(Error::NotInsensitive { i: j, j: k as u8 });
    }
    let small = CubeShape::new(k - 1, m)?;
    let block = CubeShape::new(k, m)?;
    let to_block: Vec<u64> = (0..small.size()).map(|s| block.index_of(&small.digits_of(s))).collect();
    let min_size = ((k - 1) as u64).pow(dim as u32);
    let search_cost = ((k - 1 + dim) as u64).saturating_pow(m as u32);
    let opts = SearchOptions::default();

    let mut rem = d.clone();
    let mut subspaces = Vec::new();
    let mut work = 0u64;
    let mut complete = true;
    'rounds: for r in 0..n / m {
        let pre = r * m;
        let tail = n - pre - m;
        let kb = block.size();
        let kt = (k as u64).pow(tail as u32);
        let kp = (k as u64).pow(pre as u32);
        for x in 0..kp {
            let xbase = x * kb * kt;
            let mut candidates: BTreeMap<Vec<u8>, Subspace> = BTreeMap::new();
            for z in 0..kt {
                let e = CubeSet::from_indices(
                    small,
                    (0..small.size()).filter(|&s| rem.contains_index(xbase + to_block[s as usize] * kt + z)),
                )?;
                if e.len() < min_size {
                    continue;
                }
                work = work.saturating_add(search_cost);
                if work > budget {
                    complete = false;
                    break 'rounds;
                }
                if let Some(u) = find_subspace_in_set(&e, dim, &opts)? {
                    let up = Subspace::from_slots(block, u.slots().to_vec(), dim)?;
                    candidates.entry(up.encoding().digits().to_vec()).or_insert(up);
                }
            }
            // most z wins; BTreeMap order breaks ties by encoding
            let mut best: Option<(Subspace, Vec<u64>)> = None;
            for u in candidates.into_values() {
                let pts = u.point_indices();
                let t: Vec<u64> =
                    (0..kt).filter(|&z| pts.iter().all(|&p| rem.contains_index(xbase + p * kt + z))).collect();
                if best.as_ref().is_none_or(|(_, bt)| t.len() > bt.len()) {
                    best = Some((u, t));
                }
            }
            let Some((u, t)) = best else { continue };
            let x_digits = if pre > 0 { CubeShape::new(k, pre)?.digits_of(x) } else { Vec::new() };
            let tail_shape = if tail > 0 { Some(CubeShape::new(k, tail)?) } else { None };
            for z in t {
                let z_digits = tail_shape.map_or_else(Vec::new, |s| s.digits_of(z));
                let slots: Vec<Slot> = x_digits
                    .iter()
                    .map(|&v| Slot::Fixed(v))
                    .chain(u.slots().iter().copied())
                    .chain(z_digits.iter().map(|&v| Slot::Fixed(v)))
                    .collect();
                let v = Subspace::from_slots(shape, slots, dim)?;
                for p in v.point_indices() {
                    rem.remove_index(p);
                }
                subspaces.push(v);
            }
        }
    }
    let covered = d.difference(&rem)?;
    let (precondition_met, allowed_loss) = match eta {
        Some(eta) => (single_level_precondition(k, n, level, eta), Some(int(3) * eta)),
        None => (false, None),
    };
    Ok(PartitionResult {
        subspaces,
        residual: rem,
        input_density: uniform_measure(d).into_inner(),
        covered_density: uniform_measure(&covered).into_inner(),
        allowed_loss: allowed_loss.map(|l| crate::rational::fmt_ratio(&l)),
        precondition_met,
        complete,
    })
}

/// `m ≥ MDHJ_{k-1}(dim, η)` and `n ≥ m(k+dim)^m/η`, using `25 η^{-2^dim}`
/// for `k = 3` and `dim` for `k = 2`; unknown (false) for larger `k`.
fn single_level_precondition(k: usize, n: usize, level: PartitionLevel, eta: &Rational) -> bool {
    if eta <= &Rational::zero() {
        return false;
    }
    let m = int(level.m as u64);
    let mdhj = match k {
        2 => int(level.dim as u64),
        3 => {
            if level.dim > 20 {
                return false;
            }
            int(25) * pow_ratio(&(int(1) / eta), 1u32 << level.dim)
        }
        _ => return false,
    };
    let size = &m * pow_ratio(&int((k + level.dim) as u64), level.m as u32) / eta;
    m >= mdhj && int(n as u64) >= size
}

/// Partitions most of `D_1 ∩ ... ∩ D_t` (`D_j` being `jk`-insensitive) into
/// `levels.last().dim`-dimensional subspaces.
///
/// `D_t` is partitioned first with `levels[0]`; inside each resulting
/// subspace the remaining sets are still insensitive and the procedure
/// recurses with the next level.
pub fn partition_intersection(
    ds: &[CubeSet],
    levels: &[PartitionLevel],
    eta: Option<&Rational>,
    budget: u64,
) -> Result<PartitionResult> {
    let Some(first) = ds.first() else {
        return Err(Error::param("need at least one insensitive set"));
    };
    let shape = first.shape();
    let k = shape.k();
    if ds.len() >= k {
        return Err(Error::param(format!("at most k-1 = {} insensitive sets", k - 1)));
    }
    if levels.len() != ds.len() {
        return Err(Error::LengthMismatch { expected: ds.len(), got: levels.len() });
    }
    if ds.iter().any(|s| s.shape() != shape) {
        return Err(Error::ShapeMismatch("all D_j must live in the same cube".into()));
    }
    for (j, s) in ds.iter().enumerate() {
        if !is_ij_insensitive(s, j as u8 + 1, k as u8)? {
            return Err(Error::NotInsensitive { i: j as u8 + 1, j: k as u8 });
        }
    }
    let mut complete = true;
    let subspaces = recurse(ds, levels, budget, &mut complete)?;
    let d = ds.iter().skip(1).try_fold(first.clone(), |acc, s| acc.intersection(s))?;
    let mut covered = CubeSet::empty(shape);
    for v in &subspaces {
        for p in v.point_indices() {
            covered.insert_index(p);
        }
    }
    let mut precondition_met = eta.is_some();
    if let Some(eta) = eta {
        let mut n = shape.n();
        for level in levels {
            precondition_met &= single_level_precondition(k, n, *level, eta);
            n = level.dim;
        }
    }
    let allowed = eta.map(|e| crate::rational::fmt_ratio(&(int(3 * ds.len() as u64) * e)));
    Ok(PartitionResult {
        subspaces,
        residual: d.difference(&covered)?,
        input_density: uniform_measure(&d).into_inner(),
        covered_density: uniform_measure(&covered).into_inner(),
        allowed_loss: allowed,
        precondition_met,
        complete,
    })
}

fn recurse(ds: &[CubeSet], levels: &[PartitionLevel], budget: u64, complete: &mut bool) -> Result<Vec<Subspace>> {
    let last = ds.len() - 1;
    let outer = partition_insensitive_with(&ds[last], last as u8 + 1, levels[0], None, budget)?;
    *complete &= outer.complete;
    if last == 0 {
        return Ok(outer.subspaces);
    }
    let mut out = Vec::new();
    for v in outer.subspaces {
        let inner: Vec<CubeSet> = ds[..last].iter().map(|s| v.pullback(s)).collect::<Result<_>>()?;
        for w in recurse(&inner, &levels[1..], budget, complete)? {
            out.push(v.compose(&w)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::DEFAULT_WORK_BUDGET;
    use crate::increment::random_insensitive_set;
    use crate::measures::seeded_rng;

    fn shape(k: usize, n: usize) -> CubeShape {
        CubeShape::new(k, n).unwrap()
    }

    fn set(s: CubeShape, words: &[&str]) -> CubeSet {
        CubeSet::from_predicate(s, |d| {
            let w: String = d.iter().map(|v| char::from(b'0' + v)).collect();
            words.contains(&w.as_str())
        })
    }

    #[test]
    fn full_cube_partitions_exactly() {
        for (k, n, dim) in [(3, 4, 1), (3, 4, 2), (2, 5, 1), (4, 3, 1)] {
            let s = shape(k, n);
            let full = CubeSet::full(s);
            let res = partition_insensitive(&full, dim, dim).unwrap();
            assert!(res.residual.is_empty(), "k={k} n={n} dim={dim}");
            assert!(res.check(&full, dim));
            assert_eq!(res.covered_density, int(1));
        }
    }

    #[test]
    fn empty_set_gives_empty_partition() {
        let s = shape(3, 3);
        let res = partition_insensitive(&CubeSet::empty(s), 1, 1).unwrap();
        assert!(res.subspaces.is_empty() && res.residual.is_empty());
    }

    #[test]
    fn rejects_sensitive_input() {
        let s = shape(3, 2);
        let d = set(s, &["11"]);
        assert!(partition_insensitive(&CubeSet::full(s), 1, 1).is_ok());
        let bad = d.union(&set(s, &["22"])).unwrap();
        assert!(matches!(partition_insensitive(&bad, 1, 1), Err(Error::NotInsensitive { .. })));
    }

    #[test]
    fn removal_breaks_global_but_not_local_insensitivity() {
        // B = {11,22,23,32,33} x {2,3}, 23-insensitive; the only U x T inside
        // it is {11,22,33} x {2,3}
        let s = shape(3, 3);
        let b = set(s, &["112", "113", "222", "223", "232", "233", "322", "323", "332", "333"]);
        assert!(is_ij_insensitive(&b, 2, 3).unwrap());
        let res = partition_insensitive_with(&b, 2, PartitionLevel { dim: 1, m: 2 }, None, DEFAULT_WORK_BUDGET)
            .unwrap();
        assert_eq!(res.subspaces.len(), 2);
        assert_eq!(res.residual, set(s, &["232", "233", "322", "323"]));
        assert!(!is_ij_insensitive(&res.residual, 2, 3).unwrap());
        assert!(fibers_insensitive(&res.residual, 2, 2, 3).unwrap());
        assert!(res.check(&b, 1));
    }

    #[test]
    fn random_sets_keep_structure() {
        let mut rng = seeded_rng(21);
        for trial in 0..30 {
            let n = 3 + trial % 4;
            let s = shape(3, n);
            let d = random_insensitive_set(s, 1, 3, 0.7, &mut rng).unwrap();
            for (dim, m) in [(1, 1), (1, 2), (2, 2)] {
                let res = partition_insensitive(&d, dim, m).unwrap();
                assert!(res.check(&d, dim), "trial {trial} dim {dim} m {m}");
            }
        }
    }

    #[test]
    fn intersection_partition() {
        let mut rng = seeded_rng(5);
        for trial in 0..20 {
            let n = 4 + trial % 3;
            let s = shape(3, n);
            let d1 = random_insensitive_set(s, 1, 3, 0.8, &mut rng).unwrap();
            let d2 = random_insensitive_set(s, 2, 3, 0.8, &mut rng).unwrap();
            let levels = PartitionLevel::schedule(n, 2, 1);
            let res = partition_intersection(&[d1.clone(), d2.clone()], &levels, None, DEFAULT_WORK_BUDGET).unwrap();
            let d = d1.intersection(&d2).unwrap();
            assert!(res.check(&d, 1), "trial {trial}");
        }
        let s = shape(3, 5);
        let full = CubeSet::full(s);
        let res =
            partition_intersection(&[full.clone(), full.clone()], &PartitionLevel::schedule(5, 2, 1), None, DEFAULT_WORK_BUDGET)
                .unwrap();
        assert!(res.residual.is_empty() && res.check(&full, 1));
    }

    #[test]
    fn preconditions_need_huge_n() {
        let s = shape(3, 4);
        let res = partition_insensitive_with(
            &CubeSet::full(s),
            1,
            PartitionLevel::exact(1),
            Some(&Rational::new(1.into(), 10.into())),
            DEFAULT_WORK_BUDGET,
        )
        .unwrap();
        assert!(!res.precondition_met);
        assert_eq!(res.bound_holds(), Some(true));
    }
}
