use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::equal_slices::equal_slices_prob_counts;
use super::slices::compositions;
use crate::cube::CubeShape;
use crate::error::{Error, Result};
use crate::rational::{big, falling, int, multinomial, pow_ratio, ratio, Rational};

/// `r_{n,k,m} = Π_{i=1..m} (n+k-i)/(n-i+1)`, the factor by which uniform-on-`m`
/// composed with equal-slices-on-the-rest overweights balanced points.
pub fn transfer_ratio(n: usize, k: usize, m: usize) -> Result<Rational> {
    if m >= n {
        return Err(Error::param(format!("transfer ratio needs m < n, got m = {m}, n = {n}")));
    }
    let mut r = Rational::one();
    for i in 1..=m {
        r *= ratio((n + k - i) as u64, (n - i + 1) as u64);
    }
    Ok(r)
}

/// `(1 + k/(n-m))^m`, the upper bound for [`transfer_ratio`].
pub fn transfer_ratio_upper(n: usize, k: usize, m: usize) -> Result<Rational> {
    if m >= n {
        return Err(Error::param("transfer ratio needs m < n"));
    }
    Ok(pow_ratio(&(int(1) + ratio(k as u64, (n - m) as u64)), m as u32))
}

/// How the coordinates outside the random injection are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictionMode {
    /// `y` uniform on `[k]^{n-m}`.
    UniformTail,
    /// `y` equal-slices on `[k]^{n-m}`.
    EqualSlicesTail,
}

impl std::str::FromStr for RestrictionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform_tail" => Ok(RestrictionMode::UniformTail),
            "equal_slices" | "equal_slices_tail" => Ok(RestrictionMode::EqualSlicesTail),
            _ => Err(Error::Parse(format!("unknown restriction mode `{s}`"))),
        }
    }
}

/// A law on `[k]^n` that is constant on slices: the probability of a single
/// point, keyed by its value counts.
pub type ClassLaw = BTreeMap<Vec<usize>, Rational>;

/// Point probabilities of the composed law, by value counts of the point.
///
/// A random injection `σ: [m] -> [n]` places `x ~ inner` on `σ([m])` and `y`
/// (drawn per `mode`) fills the remaining coordinates in order. The number of
/// injections carrying `z` to a given `x` is `Π_j (c_j)_{a_j}` where `c` and
/// `a` are the value counts of `z` and `x`, so the law depends on `z` only
/// through `c`.
pub fn composed_restriction_classes(
    k: usize,
    n: usize,
    m: usize,
    inner: &Distribution,
    mode: RestrictionMode,
) -> Result<ClassLaw> {
    let ishape = inner.shape();
    if ishape.n() != m {
        return Err(Error::DimensionMismatch { expected: m, got: ishape.n() });
    }
    if m > n {
        return Err(Error::param(format!("m = {m} exceeds n = {n}")));
    }
    if ishape.k() != k && ishape.k() + 1 != k {
        return Err(Error::param(format!("inner alphabet {} must be k or k-1 for k = {k}", ishape.k())));
    }
    let mut inner_mass: HashMap<Vec<usize>, Rational> = HashMap::new();
    for (&i, p) in inner.probs() {
        let mut counts = vec![0usize; k];
        for d in ishape.digits_of(i) {
            counts[d as usize - 1] += 1;
        }
        *inner_mass.entry(counts).or_insert_with(Rational::zero) += p;
    }
    let injections = big(&falling(n as u64, m as u64));
    let uniform_tail = Rational::new(1.into(), num_bigint::BigInt::from(k).pow((n - m) as u32));
    let mut out = ClassLaw::new();
    for c in compositions(n, k, 0) {
        let mut total = Rational::zero();
        for (a, mass) in &inner_mass {
            if a.iter().zip(&c).any(|(x, z)| x > z) {
                continue;
            }
            let ways = a
                .iter()
                .zip(&c)
                .fold(num_bigint::BigUint::one(), |acc, (&x, &z)| acc * falling(z as u64, x as u64));
            let rest: Vec<usize> = c.iter().zip(a).map(|(z, x)| z - x).collect();
            let tail = match mode {
                RestrictionMode::UniformTail => uniform_tail.clone(),
                RestrictionMode::EqualSlicesTail if n == m => Rational::one(),
                RestrictionMode::EqualSlicesTail => equal_slices_prob_counts(&rest),
            };
            total += mass * big(&ways) * tail;
        }
        out.insert(c, total / &injections);
    }
    Ok(out)
}

/// The exact composed law as a distribution on `[k]^n`.
pub fn composed_restriction_distribution(
    shape: CubeShape,
    m: usize,
    inner: &Distribution,
    mode: RestrictionMode,
) -> Result<Distribution> {
    let classes = composed_restriction_classes(shape.k(), shape.n(), m, inner, mode)?;
    Distribution::from_class_fn(shape, |c| classes[c].clone())
}

/// The uniform law on `[k]^n` by classes.
pub fn uniform_classes(k: usize, n: usize) -> ClassLaw {
    let p = Rational::new(1.into(), num_bigint::BigInt::from(k).pow(n as u32));
    compositions(n, k, 0).into_iter().map(|c| (c, p.clone())).collect()
}

/// The equal-slices law on `[k]^n` by classes.
pub fn equal_slices_classes(k: usize, n: usize) -> ClassLaw {
    compositions(n, k, 0)
        .into_iter()
        .map(|c| {
            let p = equal_slices_prob_counts(&c);
            (c, p)
        })
        .collect()
}

/// Total mass of a class law; 1 for a probability law.
pub fn class_total(law: &ClassLaw) -> Rational {
    law.iter().fold(Rational::zero(), |acc, (c, p)| acc + big(&multinomial(c)) * p)
}

/// Total variation between two class-constant laws on the same cube.
pub fn class_tv(a: &ClassLaw, b: &ClassLaw) -> Rational {
    let mut sum = Rational::zero();
    for (c, p) in a {
        let q = b.get(c).cloned().unwrap_or_else(Rational::zero);
        sum += big(&multinomial(c)) * (p - q).abs();
    }
    for (c, q) in b {
        if !a.contains_key(c) {
            sum += big(&multinomial(c)) * q;
        }
    }
    sum / int(2)
}
