use std::collections::HashMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::slices::{compositions, nondegenerate_slice_count, slice_count};
use crate::cube::{CubeSet, CubeShape, Point};
use crate::error::{Error, Result};
use crate::rational::{big, binomial, int, multinomial, ratio, serde_ratio, ExactProb, Rational};

/// The three laws on `[k]^n` used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Uniform,
    EqualSlices,
    Nondegenerate,
}

impl std::str::FromStr for Law {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Law::Uniform),
            "equal_slices" | "equal-slices" => Ok(Law::EqualSlices),
            "nondegenerate" | "nondegenerate_equal_slices" => Ok(Law::Nondegenerate),
            _ => Err(Error::Parse(format!("unknown measure `{s}`"))),
        }
    }
}

/// Probability of a single point whose value counts are `counts`.
pub fn equal_slices_prob_counts(counts: &[usize]) -> Rational {
    let n: usize = counts.iter().sum();
    let k = counts.len();
    let slices = binomial((n + k - 1) as u64, (k - 1) as u64);
    Rational::new(1.into(), (slices * multinomial(counts)).into())
}

/// Non-degenerate equal-slices probability of a point with value counts `counts`.
pub fn nondegenerate_prob_counts(counts: &[usize]) -> Rational {
    if counts.contains(&0) {
        return Rational::zero();
    }
    let n: usize = counts.iter().sum();
    let k = counts.len();
    let slices = binomial((n - 1) as u64, (k - 1) as u64);
    Rational::new(1.into(), (slices * multinomial(counts)).into())
}

pub fn equal_slices_prob(x: &Point) -> ExactProb {
    ExactProb::new(equal_slices_prob_counts(&x.value_counts())).expect("a point probability")
}

pub fn nondegenerate_prob(x: &Point) -> Result<ExactProb> {
    require_nondegenerate(x.shape())?;
    Ok(ExactProb::new(nondegenerate_prob_counts(&x.value_counts())).expect("a point probability"))
}

pub fn uniform_prob(shape: CubeShape) -> ExactProb {
    ExactProb::from_counts(1, shape.size())
}

fn require_nondegenerate(shape: CubeShape) -> Result<()> {
    if shape.n() < shape.k() {
        return Err(Error::param(format!(
            "no non-degenerate slice in [{}]^{}: needs n >= k",
            shape.k(),
            shape.n()
        )));
    }
    Ok(())
}

/// Members of `a` grouped by value counts.
pub(crate) fn slice_histogram(a: &CubeSet) -> HashMap<Vec<usize>, u64> {
    let shape = a.shape();
    let mut digits = vec![0u8; shape.n()];
    let mut counts = vec![0usize; shape.k()];
    let mut hist: HashMap<Vec<usize>, u64> = HashMap::new();
    for i in a.iter() {
        shape.digits_into(i, &mut digits);
        counts.iter_mut().for_each(|c| *c = 0);
        for &d in &digits {
            counts[d as usize - 1] += 1;
        }
        *hist.entry(counts.clone()).or_default() += 1;
    }
    hist
}

/// `ν(A)`.
pub fn equal_slices_measure(a: &CubeSet) -> ExactProb {
    let total = slice_histogram(a)
        .into_iter()
        .fold(Rational::zero(), |acc, (c, m)| acc + equal_slices_prob_counts(&c) * int(m));
    ExactProb::new(total).expect("a measure")
}

/// `ν̃(A)`; requires `n >= k`.
pub fn nondegenerate_equal_slices_measure(a: &CubeSet) -> Result<ExactProb> {
    require_nondegenerate(a.shape())?;
    let total = slice_histogram(a)
        .into_iter()
        .fold(Rational::zero(), |acc, (c, m)| acc + nondegenerate_prob_counts(&c) * int(m));
    Ok(ExactProb::new(total).expect("a measure"))
}

pub fn uniform_measure(a: &CubeSet) -> ExactProb {
    ExactProb::new(a.density()).expect("a density")
}

pub fn measure(a: &CubeSet, law: Law) -> Result<ExactProb> {
    match law {
        Law::Uniform => Ok(uniform_measure(a)),
        Law::EqualSlices => Ok(equal_slices_measure(a)),
        Law::Nondegenerate => nondegenerate_equal_slices_measure(a),
    }
}

/// Equal-slices probability that no coordinate equals `k`: `(k-1)/(n+k-1)`.
pub fn degenerate_prob(shape: CubeShape) -> ExactProb {
    ExactProb::new(ratio((shape.k() - 1) as u64, (shape.n() + shape.k() - 1) as u64)).expect("a probability")
}

/// A computed probability next to an upper bound for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCheck {
    #[serde(with = "serde_ratio")]
    pub exact: Rational,
    #[serde(with = "serde_ratio")]
    pub bound: Rational,
    /// Whether the hypothesis under which the bound is claimed holds.
    pub precondition_met: bool,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.exact <= self.bound
    }

    /// A violation only counts when the precondition holds.
    pub fn passes(&self) -> bool {
        !self.precondition_met || self.holds()
    }
}

/// Probability that some value is missing, against the union bound
/// `k(k-1)/(n+k-1)` (which is at most `k²/n`).
pub fn missing_value_prob(shape: CubeShape) -> BoundCheck {
    let (k, n) = (shape.k() as u64, shape.n() as u64);
    let nondeg = big(&nondegenerate_slice_count(shape)) / big(&slice_count(shape));
    BoundCheck {
        exact: int(1) - nondeg,
        bound: ratio(k * (k - 1), n + k - 1),
        precondition_met: true,
    }
}

/// Probability that fewer than `m` coordinates equal `k`, against `mk/n`.
pub fn few_k_prob_bound(shape: CubeShape, m: usize) -> Result<BoundCheck> {
    let (k, n) = (shape.k(), shape.n());
    if m == 0 || m > n {
        return Err(Error::param(format!("m = {m} must lie in 1..={n}")));
    }
    let exact = if k == 1 {
        Rational::zero()
    } else {
        // slices with a_k = s number C(n - s + k - 2, k - 2)
        let hits = (0..m).fold(num_bigint::BigUint::zero(), |acc, s| {
            acc + binomial((n - s + k - 2) as u64, (k - 2) as u64)
        });
        big(&hits) / big(&slice_count(shape))
    };
    Ok(BoundCheck {
        exact,
        bound: ratio((m * k) as u64, n as u64),
        precondition_met: n >= m * k,
    })
}

/// Probability that some value occurs fewer than `m` times, against `mk²/n`.
pub fn imbalance_prob_bound(shape: CubeShape, m: usize) -> Result<BoundCheck> {
    let (k, n) = (shape.k(), shape.n());
    if m == 0 || m > n {
        return Err(Error::param(format!("m = {m} must lie in 1..={n}")));
    }
    let bad = compositions(n, k, 0)
        .into_iter()
        .filter(|c| c.iter().any(|&a| a < m))
        .count();
    Ok(BoundCheck {
        exact: big(&num_bigint::BigUint::from(bad)) / big(&slice_count(shape)),
        bound: ratio((m * k * k) as u64, n as u64),
        precondition_met: n >= m * k,
    })
}
