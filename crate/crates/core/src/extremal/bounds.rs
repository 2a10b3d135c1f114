//! Upper bounds on the largest line-free set extending a partial assignment.
//!
//! Every bound takes the included points `inc` and the available points
//! `avail` (included or undecided) as word bitsets over point indices.

use super::hypergraph::LineHypergraph;
use crate::cube::{line_progressions, CubeShape};

#[inline]
pub(crate) fn bit(words: &[u64], i: usize) -> bool {
    words[i >> 6] >> (i & 63) & 1 == 1
}

/// Largest `b` with `k^b <= 9`, at least 1 and at most `n`.
fn base_dimension(k: usize, n: usize) -> usize {
    let mut b = 1;
    while b < n && k.pow(b as u32 + 1) <= 9 {
        b += 1;
    }
    b
}

/// Recursive slab bound: exact values on small subcubes, then for each larger
/// subcube the least, over its free coordinates, of the sum over the `k` slabs.
///
/// Subcubes are indexed by words of `[k+1]^n`, the symbol `k+1` marking a free
/// coordinate.
#[derive(Debug, Clone)]
pub struct SlabBound {
    k: usize,
    p: usize,
    /// `table[(avail << p) | inc]` for subsets of `[k]^b`; `None` when `b = 1`
    /// and the alphabet is too large to tabulate.
    table: Option<Vec<u8>>,
    base_ids: Vec<u32>,
    /// Point indices of each base subcube, `p` per subcube, in local index order.
    base_points: Vec<u32>,
    /// `(subcube, first child, child stride, number of split coordinates)`.
    splits: Vec<(u32, u32, u32)>,
    split_children: Vec<(u32, u32)>,
    scratch: Vec<u16>,
    root: usize,
}

impl SlabBound {
    pub fn new(shape: CubeShape) -> Self {
        let (k, n) = (shape.k(), shape.n());
        let b = base_dimension(k, n);
        let p = k.pow(b as u32);
        let table = if p <= 10 { Some(Self::base_table(k, b)) } else { None };

        let ext = CubeShape::new(k + 1, n).expect("subcube encoding fits");
        let ext_w = ext.weights();
        let w = shape.weights();
        let mut base_ids = Vec::new();
        let mut base_points = Vec::new();
        let mut by_dim: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
        let mut digits = vec![0u8; n];
        for s in 0..ext.size() {
            ext.digits_into(s, &mut digits);
            let free: Vec<usize> = (0..n).filter(|&c| digits[c] as usize == k + 1).collect();
            by_dim[free.len()].push(s as u32);
            if free.len() == b {
                base_ids.push(s as u32);
                let fixed: u64 = (0..n)
                    .filter(|&c| digits[c] as usize != k + 1)
                    .map(|c| (digits[c] as u64 - 1) * w[c])
                    .sum();
                let local = CubeShape::new(k, b).expect("base cube");
                let mut ld = vec![0u8; b];
                for li in 0..local.size() {
                    local.digits_into(li, &mut ld);
                    let off: u64 = free.iter().zip(&ld).map(|(&c, &d)| (d as u64 - 1) * w[c]).sum();
                    base_points.push((fixed + off) as u32);
                }
            }
        }
        let mut splits = Vec::new();
        let mut split_children = Vec::new();
        for dim_ids in by_dim.iter().skip(b + 1) {
            for &s in dim_ids {
                ext.digits_into(s as u64, &mut digits);
                let start = split_children.len() as u32;
                for c in 0..n {
                    if digits[c] as usize == k + 1 {
                        // child with coordinate c fixed to 1; later slabs at +j*w
                        let child0 = s as u64 - k as u64 * ext_w[c];
                        split_children.push((child0 as u32, ext_w[c] as u32));
                    }
                }
                splits.push((s, start, split_children.len() as u32 - start));
            }
        }
        SlabBound {
            k,
            p,
            table,
            base_ids,
            base_points,
            splits,
            split_children,
            scratch: vec![0; ext.size() as usize],
            root: ext.size() as usize - 1,
        }
    }

    /// Exact maxima for every `(inc, avail)` pair over `[k]^b`.
    fn base_table(k: usize, b: usize) -> Vec<u8> {
        let local = CubeShape::new(k, b).expect("base cube");
        let p = local.size() as usize;
        let lines: Vec<u32> = line_progressions(local, false)
            .into_iter()
            .map(|(base, step)| (0..k as u64).fold(0u32, |m, j| m | 1 << (base + j * step)))
            .collect();
        let full = (1u32 << p) - 1;
        let mut table = vec![0u8; 1 << (2 * p)];
        for l in 0..=full {
            #[allow(clippy::manual_contains)] // false positive: `e` is the loop variable
            if lines.iter().any(|&e| l & e == e) {
                continue;
            }
            let size = l.count_ones() as u8;
            // every avail ⊇ l
            let mut extra = full & !l;
            loop {
                let avail = l | extra;
                // every inc ⊆ l
                let mut inc = l;
                loop {
                    let slot = &mut table[((avail as usize) << p) | inc as usize];
                    if *slot < size {
                        *slot = size;
                    }
                    if inc == 0 {
                        break;
                    }
                    inc = (inc - 1) & l;
                }
                if extra == 0 {
                    break;
                }
                extra = (extra - 1) & (full & !l);
            }
        }
        table
    }

    fn base_value(&self, inc: u32, avail: u32) -> u16 {
        match &self.table {
            Some(t) => t[((avail as usize) << self.p) | inc as usize] as u16,
            None => {
                // a single coordinate: only the full line is forbidden
                let a = avail.count_ones() as u16;
                if a as usize == self.k {
                    a - 1
                } else {
                    a
                }
            }
        }
    }

    /// Bound for the whole cube.
    pub fn eval(&mut self, inc: &[u64], avail: &[u64]) -> u32 {
        let p = self.p;
        for (bi, &s) in self.base_ids.iter().enumerate() {
            let pts = &self.base_points[bi * p..(bi + 1) * p];
            let mut im = 0u32;
            let mut am = 0u32;
            for (li, &pt) in pts.iter().enumerate() {
                let pt = pt as usize;
                if bit(inc, pt) {
                    im |= 1 << li;
                }
                if bit(avail, pt) {
                    am |= 1 << li;
                }
            }
            self.scratch[s as usize] = self.base_value(im, am);
        }
        let k = self.k as u32;
        for &(s, start, len) in &self.splits {
            let mut best = u16::MAX;
            for &(child0, stride) in &self.split_children[start as usize..(start + len) as usize] {
                let mut sum = 0u16;
                for j in 0..k {
                    sum += self.scratch[(child0 + j * stride) as usize];
                }
                best = best.min(sum);
            }
            self.scratch[s as usize] = best;
        }
        self.scratch[self.root] as u32
    }
}

/// For `k = 2`: a symmetric chain decomposition of `[2]^n`. Each chain holds
/// at most one point of a line-free set.
#[derive(Debug, Clone)]
pub struct ChainBound {
    chain_of: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl ChainBound {
    pub fn new(shape: CubeShape) -> Option<Self> {
        if shape.k() != 2 {
            return None;
        }
        let n = shape.n();
        let mut ids = std::collections::HashMap::new();
        let mut chain_of = Vec::with_capacity(shape.size() as usize);
        let mut digits = vec![0u8; n];
        for i in 0..shape.size() {
            shape.digits_into(i, &mut digits);
            // digit 2 is "in the set"; pair each 2 with the nearest unmatched 1
            // on its left, and drop unmatched 2s to reach the chain's bottom
            let mut open: Vec<usize> = Vec::new();
            let mut key = digits.clone();
            for c in 0..n {
                if digits[c] == 1 {
                    open.push(c);
                } else if open.pop().is_none() {
                    key[c] = 1;
                }
            }
            let next = ids.len() as u32;
            chain_of.push(*ids.entry(key).or_insert(next));
        }
        let chains = ids.len();
        Some(ChainBound { chain_of, stamp: vec![0; chains], epoch: 0 })
    }

    pub fn num_chains(&self) -> usize {
        self.stamp.len()
    }

    /// Number of chains meeting `avail`.
    pub fn eval(&mut self, avail: &[u64]) -> u32 {
        self.epoch += 1;
        if self.epoch == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let mut count = 0;
        for (wi, &w) in avail.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let p = wi * 64 + w.trailing_zeros() as usize;
                w &= w - 1;
                let c = self.chain_of[p] as usize;
                if self.stamp[c] != self.epoch {
                    self.stamp[c] = self.epoch;
                    count += 1;
                }
            }
        }
        count
    }
}

/// Greedy edge-disjoint packing of lines with no excluded point: each such
/// line forces an exclusion among its undecided points.
pub fn matching_bound(g: &LineHypergraph, inc: &[u64], avail: &[u64], used: &mut [u64]) -> u32 {
    used.iter_mut().for_each(|w| *w = 0);
    let mut forced = 0;
    'edges: for e in g.edges() {
        for &p in e {
            let p = p as usize;
            if !bit(avail, p) {
                continue 'edges;
            }
            if !bit(inc, p) && bit(used, p) {
                continue 'edges;
            }
        }
        for &p in e {
            let p = p as usize;
            if !bit(inc, p) {
                used[p >> 6] |= 1 << (p & 63);
            }
        }
        forced += 1;
    }
    let avail_count: u32 = avail.iter().map(|w| w.count_ones()).sum();
    avail_count.saturating_sub(forced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{CubeSet, SearchOptions};

    fn words(set: &CubeSet) -> Vec<u64> {
        set.words().to_vec()
    }

    #[test]
    fn root_bounds() {
        for (k, n, expect) in [(3, 1, 2), (3, 2, 6), (3, 3, 18), (3, 4, 54), (2, 3, 3), (4, 1, 3)] {
            let s = CubeShape::new(k, n).unwrap();
            let mut sb = SlabBound::new(s);
            let empty = vec![0u64; s.size().div_ceil(64) as usize];
            let full = words(&CubeSet::full(s));
            assert_eq!(sb.eval(&empty, &full), expect, "k={k} n={n}");
        }
    }

    #[test]
    fn chain_counts_are_central_binomials() {
        for n in 1..=10 {
            let s = CubeShape::new(2, n).unwrap();
            let mut cb = ChainBound::new(s).unwrap();
            let expect = crate::rational::binomial(n as u64, (n / 2) as u64);
            assert_eq!(num_bigint::BigUint::from(cb.num_chains()), expect);
            assert_eq!(num_bigint::BigUint::from(cb.eval(&words(&CubeSet::full(s)))), expect);
        }
    }

    #[test]
    fn chains_are_chains() {
        let s = CubeShape::new(2, 6).unwrap();
        let cb = ChainBound::new(s).unwrap();
        let mut members: std::collections::HashMap<u32, Vec<u64>> = Default::default();
        for i in 0..s.size() {
            members.entry(cb.chain_of[i as usize]).or_default().push(i);
        }
        for pts in members.values() {
            let mut pts = pts.clone();
            pts.sort_by_key(|p| p.count_ones());
            for w in pts.windows(2) {
                assert_eq!(w[0] & w[1], w[0]);
                assert_eq!(w[1].count_ones(), w[0].count_ones() + 1);
            }
        }
    }

    #[test]
    fn matching_is_an_upper_bound() {
        let s = CubeShape::new(3, 2).unwrap();
        let g = LineHypergraph::build(s, &SearchOptions::default()).unwrap();
        let empty = vec![0u64; 1];
        let full = words(&CubeSet::full(s));
        let mut used = vec![0u64; 1];
        let ub = matching_bound(&g, &empty, &full, &mut used);
        assert!((6..=9).contains(&ub));
    }
}
