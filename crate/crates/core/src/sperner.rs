//! Antichains in `[2]^n`: Sperner's bound, the random-chain argument,
//! line density under equal slices, and multidimensional refinement.
//!
//! A point of `[2]^n` is read as the set of coordinates holding digit 2.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand_distr::{Binomial, Distribution as _};
use serde::Serialize;

use crate::cube::{find_line_in_set, CubeSet, CubeShape, LinePattern, SearchOptions, Slot, Subspace, Symbol};
use crate::error::{Error, Result};
use crate::measures::equal_slices_prob_counts;
use crate::rational::{big, binomial, fmt_ratio, int, ratio, serde_ratio, to_f64, ExactProb, Rational};

fn require_binary(a: &CubeSet) -> Result<()> {
    if a.shape().k() != 2 {
        return Err(Error::param(format!("antichain operations need k = 2, got k = {}", a.shape().k())));
    }
    Ok(())
}

/// No member is a proper subset of another.
pub fn is_antichain(a: &CubeSet) -> Result<bool> {
    require_binary(a)?;
    // The index itself is a bitmask of digit-2 positions, so subset order on
    // indices is subset order on sets; propagate "some member lies strictly
    // below" upward one bit at a time.
    let size = a.shape().size() as usize;
    let n = a.shape().n();
    let mut below = vec![false; size];
    for m in 0..size {
        let mut b = false;
        for c in 0..n {
            if m >> c & 1 == 1 {
                let sub = m ^ (1 << c);
                if below[sub] || a.contains_index(sub as u64) {
                    b = true;
                    break;
                }
            }
        }
        below[m] = b;
        if b && a.contains_index(m as u64) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `C(n, ⌊n/2⌋)`.
pub fn sperner_bound(n: usize) -> BigUint {
    binomial(n as u64, (n / 2) as u64)
}

/// Probability that `{π(1), ..., π(m)}` lands in `a` for uniform `π` and
/// uniform `m ∈ {0, ..., n}`.
pub fn chain_hit_probability(a: &CubeSet) -> Result<ExactProb> {
    require_binary(a)?;
    let n = a.shape().n();
    let mut layers = vec![0u64; n + 1];
    for i in a.iter() {
        layers[i.count_ones() as usize] += 1;
    }
    let total = layers.iter().enumerate().fold(Rational::zero(), |acc, (m, &c)| {
        acc + int(c) / big(&binomial(n as u64, m as u64))
    });
    ExactProb::new(total / int(n as u64 + 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpernerDensity {
    #[serde(with = "serde_ratio")]
    pub density: Rational,
    #[serde(with = "serde_ratio")]
    pub line_density: Rational,
    #[serde(with = "serde_ratio")]
    pub bound: Rational,
}

impl SpernerDensity {
    pub fn holds(&self) -> bool {
        self.line_density >= self.bound
    }
}

/// Equal-slices mass (over `[k+1]^n`) of the line patterns, degenerate ones
/// included, whose points all lie in `a`.
pub fn line_density(a: &CubeSet, opts: &SearchOptions) -> Result<Rational> {
    let shape = a.shape();
    let k = shape.k();
    opts.check(k + 1, shape.n())?;
    let big_shape = shape.with_alphabet(k + 1)?;
    let weights = shape.weights();
    let mut hist: HashMap<Vec<usize>, u64> = HashMap::new();
    let mut digits = vec![0u8; shape.n()];
    let mut counts = vec![0usize; k + 1];
    for y in 0..big_shape.size() {
        big_shape.digits_into(y, &mut digits);
        let mut base = 0u64;
        let mut step = 0u64;
        counts.iter_mut().for_each(|c| *c = 0);
        for (c, &d) in digits.iter().enumerate() {
            counts[d as usize - 1] += 1;
            if d as usize == k + 1 {
                step += weights[c];
            } else {
                base += (d as u64 - 1) * weights[c];
            }
        }
        if (0..k as u64).all(|j| a.contains_index(base + j * step)) {
            *hist.entry(counts.clone()).or_default() += 1;
        }
    }
    Ok(hist
        .into_iter()
        .fold(Rational::zero(), |acc, (c, m)| acc + equal_slices_prob_counts(&c) * int(m)))
}

/// `ν(A)`, the line density of `A`, and `ν(A)²(n+1)/(n+2)`.
pub fn probabilistic_sperner_density(a: &CubeSet) -> Result<SpernerDensity> {
    require_binary(a)?;
    let n = a.shape().n() as u64;
    let density = crate::measures::equal_slices_measure(a).into_inner();
    let line_density = line_density(a, &SearchOptions::default())?;
    let bound = &density * &density * ratio(n + 1, n + 2);
    Ok(SpernerDensity { density, line_density, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMode {
    /// Identity ordering and the best pair `(s, t)` per stage.
    Derandomized,
    /// Random ordering and binomial `(s, t)`, resampled until distinct.
    Randomized { seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineStage {
    pub stage: usize,
    pub block_size: usize,
    /// Coordinates of the block in the order used (1-based).
    pub block: Vec<usize>,
    pub s: usize,
    pub t: usize,
    #[serde(with = "serde_ratio")]
    pub density: Rational,
    /// `δ^{2^r} - 2^{d-1} n^{-1/2}`, the density the averaging argument guarantees.
    pub reference_density: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineTrace {
    pub n: usize,
    pub d: usize,
    #[serde(with = "serde_ratio")]
    pub density: Rational,
    pub block_sizes: Vec<usize>,
    pub stages: Vec<RefineStage>,
    /// `(25/n)^{1/2^d}`.
    pub density_bound: f64,
    /// `n δ^{2^d} >= 25`.
    pub precondition_met: bool,
    pub final_line: Option<String>,
    pub subspace: Option<Subspace>,
}

/// Block sizes `n_i = ⌊n / 4^{d-i}⌋` for `i < d` and the remainder last.
pub fn refine_block_sizes(n: usize, d: usize) -> Result<Vec<usize>> {
    if d == 0 {
        return Err(Error::param("d must be at least 1"));
    }
    let mut sizes = Vec::with_capacity(d);
    for i in 1..d {
        let div = 4usize.checked_pow((d - i) as u32).unwrap_or(usize::MAX);
        sizes.push(n / div);
    }
    let used: usize = sizes.iter().sum();
    sizes.push(n - used);
    if sizes.contains(&0) {
        return Err(Error::param(format!("n = {n} too small to split into {d} nonempty blocks")));
    }
    Ok(sizes)
}

/// The pair-refinement procedure for `d`-dimensional subspaces of `[2]^n`.
pub fn multidim_sperner_refine(a: &CubeSet, d: usize, mode: RefineMode) -> Result<RefineTrace> {
    require_binary(a)?;
    let n = a.shape().n();
    let sizes = refine_block_sizes(n, d)?;
    let delta = a.density();
    let delta_f = to_f64(&delta);
    let mut rng = match mode {
        RefineMode::Randomized { seed } => Some(crate::measures::seeded_rng(seed)),
        RefineMode::Derandomized => None,
    };

    let mut slots: Vec<Option<Slot>> = vec![None; n];
    // family over the remaining coordinates, in the order of `remaining`
    let mut family = a.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut stages = Vec::new();
    let mut failed = false;

    for (r, &ni) in sizes[..d - 1].iter().enumerate() {
        let rem = remaining.len();
        let mut order: Vec<usize> = (0..rem).collect();
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let block = &order[..ni];
        let rest = &order[ni..];
        let rest_shape = CubeShape::new(2, rest.len())?;
        let fam_shape = family.shape();
        let xs: Vec<CubeSet> = (0..=ni)
            .map(|s| {
                let mut digits = vec![1u8; rem];
                for &b in &block[..s] {
                    digits[b] = 2;
                }
                CubeSet::from_predicate(rest_shape, |bd| {
                    let mut full = digits.clone();
                    for (pos, &c) in rest.iter().enumerate() {
                        full[c] = bd[pos];
                    }
                    family.contains_index(fam_shape.index_of(&full))
                })
            })
            .collect();
        let (s, t) = match rng.as_mut() {
            None => {
                let mut best: Option<(u64, usize, usize)> = None;
                for s in 0..=ni {
                    for t in s + 1..=ni {
                        let v = xs[s].intersection_len(&xs[t]);
                        if best.is_none_or(|(bv, _, _)| v > bv) {
                            best = Some((v, s, t));
                        }
                    }
                }
                let (_, s, t) = best.expect("block has at least one coordinate");
                (s, t)
            }
            Some(rng) => {
                let bin = Binomial::new(ni as u64, 0.5).expect("valid binomial");
                loop {
                    let s = bin.sample(rng) as usize;
                    let t = bin.sample(rng) as usize;
                    if s != t {
                        break (s.min(t), s.max(t));
                    }
                }
            }
        };
        for (pos, &b) in block.iter().enumerate() {
            let orig = remaining[b];
            slots[orig] = Some(if pos < s {
                Slot::Fixed(2)
            } else if pos < t {
                Slot::Wild(r)
            } else {
                Slot::Fixed(1)
            });
        }
        family = xs[s].intersection(&xs[t])?;
        let block_coords: Vec<usize> = block.iter().map(|&b| remaining[b] + 1).collect();
        remaining = rest.iter().map(|&c| remaining[c]).collect();
        let reference = delta_f.powi(1 << (r + 1)) - 2f64.powi(d as i32 - 1) / (n as f64).sqrt();
        stages.push(RefineStage {
            stage: r + 1,
            block_size: ni,
            block: block_coords,
            s,
            t,
            density: family.density(),
            reference_density: reference,
        });
        if family.is_empty() {
            failed = true;
            break;
        }
    }

    let mut final_line = None;
    let mut subspace = None;
    if !failed {
        if let Some(line) = find_line_in_set(&family, &SearchOptions::default())? {
            final_line = Some(line.to_string());
            place_line(&line, &remaining, d - 1, &mut slots);
            let slots: Vec<Slot> = slots.into_iter().map(|s| s.expect("every coordinate assigned")).collect();
            let v = Subspace::from_slots(a.shape(), slots, d)?;
            debug_assert!(v.is_contained_in(a));
            subspace = Some(v);
        }
    }

    let density_bound = (25.0 / n as f64).powf(1.0 / (1u64 << d) as f64);
    let precondition_met = int(n as u64) * crate::rational::pow_ratio(&delta, 1 << d) >= int(25);
    Ok(RefineTrace {
        n,
        d,
        density: delta,
        block_sizes: sizes,
        stages,
        density_bound,
        precondition_met,
        final_line,
        subspace,
    })
}

fn place_line(line: &LinePattern, remaining: &[usize], label: usize, slots: &mut [Option<Slot>]) {
    for (pos, sym) in line.symbols().iter().enumerate() {
        slots[remaining[pos]] = Some(match *sym {
            Symbol::Fixed(v) => Slot::Fixed(v),
            Symbol::Wildcard => Slot::Wild(label),
        });
    }
}

impl RefineTrace {
    pub fn succeeded(&self) -> bool {
        self.subspace.is_some()
    }

    pub fn summary(&self) -> String {
        format!(
            "n={} d={} density={} stages={} success={}",
            self.n,
            self.d,
            fmt_ratio(&self.density),
            self.stages.len(),
            self.succeeded()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Point;
    use crate::measures::{equal_slices_measure, seeded_rng};

    fn cube(n: usize) -> CubeShape {
        CubeShape::new(2, n).unwrap()
    }

    fn subsets(n: usize) -> impl Iterator<Item = CubeSet> {
        let s = cube(n);
        (0u64..1 << s.size()).map(move |mask| {
            CubeSet::from_indices(s, (0..s.size()).filter(|i| mask >> i & 1 == 1)).unwrap()
        })
    }

    #[test]
    fn antichain_examples() {
        let middle = CubeSet::from_predicate(cube(4), |d| d.iter().filter(|&&x| x == 2).count() == 2);
        assert!(is_antichain(&middle).unwrap());
        let s = cube(1);
        let nested = CubeSet::from_points(s, &[Point::parse(s, "1").unwrap(), Point::parse(s, "2").unwrap()]).unwrap();
        assert!(!is_antichain(&nested).unwrap());
        assert!(is_antichain(&CubeSet::full(CubeShape::new(3, 2).unwrap())).is_err());
    }

    #[test]
    fn antichain_iff_line_free() {
        for a in subsets(3) {
            let free = find_line_in_set(&a, &SearchOptions::default()).unwrap().is_none();
            assert_eq!(is_antichain(&a).unwrap(), free);
        }
    }

    #[test]
    fn sperner_values() {
        assert_eq!(sperner_bound(4), BigUint::from(6u32));
        assert_eq!(sperner_bound(1), BigUint::from(1u32));
    }

    #[test]
    fn chain_probability() {
        let n = 4;
        assert_eq!(chain_hit_probability(&CubeSet::full(cube(n))).unwrap(), ExactProb::one());
        let layer = CubeSet::from_predicate(cube(n), |d| d.iter().filter(|&&x| x == 2).count() == 1);
        assert_eq!(chain_hit_probability(&layer).unwrap().value(), &ratio(1, 5));
        let mut antichains = 0;
        for a in subsets(4) {
            let p = chain_hit_probability(&a).unwrap();
            assert_eq!(p, equal_slices_measure(&a));
            if is_antichain(&a).unwrap() {
                antichains += 1;
                assert!(p.value() <= &ratio(1, 5));
            }
        }
        // antichains of a 4-element ground set, empty family included
        assert_eq!(antichains, 168);
    }

    #[test]
    fn line_density_examples() {
        let s = cube(2);
        let ends = CubeSet::from_points(s, &[Point::parse(s, "11").unwrap(), Point::parse(s, "22").unwrap()]).unwrap();
        let r = probabilistic_sperner_density(&ends).unwrap();
        assert_eq!(r.density, ratio(2, 3));
        assert_eq!(r.line_density, ratio(1, 2));
        assert_eq!(r.bound, ratio(1, 3));
        let full = probabilistic_sperner_density(&CubeSet::full(cube(5))).unwrap();
        assert_eq!(full.line_density, int(1));
        for a in subsets(3) {
            assert!(probabilistic_sperner_density(&a).unwrap().holds());
        }
    }

    #[test]
    fn refinement_produces_valid_subspaces() {
        let full = CubeSet::full(cube(3));
        let t = multidim_sperner_refine(&full, 1, RefineMode::Derandomized).unwrap();
        assert!(t.succeeded());
        let mut rng = seeded_rng(4);
        let s = cube(8);
        for round in 0..20 {
            let a = CubeSet::random(s, 0.8, &mut rng);
            for mode in [RefineMode::Derandomized, RefineMode::Randomized { seed: round }] {
                let t = multidim_sperner_refine(&a, 2, mode).unwrap();
                if let Some(v) = &t.subspace {
                    assert_eq!(v.dim(), 2);
                    assert!(v.is_contained_in(&a));
                } else {
                    assert!(t.stages.iter().all(|st| st.s < st.t));
                }
            }
        }
        assert!(multidim_sperner_refine(&CubeSet::full(cube(3)), 3, RefineMode::Derandomized).is_err());
    }
}
