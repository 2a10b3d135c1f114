use itertools::Itertools;

use crate::cube::CubeShape;

/// Coordinate permutations combined with one permutation of the alphabet
/// applied at every coordinate. Both send lines to lines.
///
/// Elements are stored as explicit permutations of point indices.
#[derive(Debug, Clone)]
pub struct LineSymmetries {
    points: usize,
    perms: Vec<u32>,
}

impl LineSymmetries {
    /// `n! * k!`, the order of the group.
    pub fn order(shape: CubeShape) -> u128 {
        let fact = |m: usize| (1..=m as u128).product::<u128>();
        fact(shape.n()) * fact(shape.k())
    }

    /// The full group, or `None` when its order exceeds `max_order`.
    pub fn build(shape: CubeShape, max_order: u64) -> Option<Self> {
        if Self::order(shape) > max_order as u128 {
            return None;
        }
        let (k, n) = (shape.k(), shape.n());
        let points = shape.size() as usize;
        let mut perms = Vec::with_capacity(Self::order(shape) as usize * points);
        let mut src = vec![0u8; n];
        let mut dst = vec![0u8; n];
        for sigma in (0..n).permutations(n) {
            for pi in (1..=k as u8).permutations(k) {
                for i in 0..points as u64 {
                    shape.digits_into(i, &mut src);
                    for c in 0..n {
                        dst[sigma[c]] = pi[src[c] as usize - 1];
                    }
                    perms.push(shape.index_of(&dst) as u32);
                }
            }
        }
        Some(LineSymmetries { points, perms })
    }

    pub fn len(&self) -> usize {
        self.perms.len() / self.points.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    /// Image of point `p` under element `g`.
    #[inline]
    pub fn apply(&self, g: usize, p: usize) -> usize {
        self.perms[g * self.points + p] as usize
    }

    /// Elements of `subgroup` fixing `p`.
    pub fn stabilizer(&self, subgroup: &[u32], p: usize) -> Vec<u32> {
        subgroup.iter().copied().filter(|&g| self.apply(g as usize, p) == p).collect()
    }

    /// Orbit of `p` under `subgroup`, sorted.
    pub fn orbit(&self, subgroup: &[u32], p: usize) -> Vec<usize> {
        let mut out: Vec<usize> = subgroup.iter().map(|&g| self.apply(g as usize, p)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::line_progressions;
    use std::collections::HashSet;

    #[test]
    fn elements_preserve_lines() {
        let s = CubeShape::new(3, 3).unwrap();
        let g = LineSymmetries::build(s, 1000).unwrap();
        assert_eq!(g.len(), 36);
        let lines: HashSet<Vec<usize>> = line_progressions(s, false)
            .into_iter()
            .map(|(b, st)| {
                let mut v: Vec<usize> = (0..3).map(|j| (b + j * st) as usize).collect();
                v.sort_unstable();
                v
            })
            .collect();
        for e in 0..g.len() {
            for l in &lines {
                let mut img: Vec<usize> = l.iter().map(|&p| g.apply(e, p)).collect();
                img.sort_unstable();
                assert!(lines.contains(&img));
            }
        }
    }

    #[test]
    fn orbits_and_stabilizers() {
        let s = CubeShape::new(3, 2).unwrap();
        let g = LineSymmetries::build(s, 1000).unwrap();
        let all: Vec<u32> = (0..g.len() as u32).collect();
        // the diagonal points 11, 22, 33 form one orbit
        assert_eq!(g.orbit(&all, 0), vec![0, 4, 8]);
        assert_eq!(g.orbit(&all, 1).len(), 6);
        // orbit-stabilizer
        assert_eq!(g.stabilizer(&all, 0).len() * 3, g.len());
        assert!(LineSymmetries::build(CubeShape::new(2, 10).unwrap(), 50_000).is_none());
    }
}
