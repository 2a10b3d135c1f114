use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::equal_slices::{equal_slices_prob_counts, nondegenerate_prob_counts};
use crate::cube::{CubeSet, CubeShape, Point};
use crate::error::{Error, Result};
use crate::rational::{fmt_ratio, parse_ratio, ratio, to_f64, ExactProb, Rational};

/// An exact probability law on `[k]^n`, stored sparsely by point index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    shape: CubeShape,
    probs: BTreeMap<u64, Rational>,
}

impl Distribution {
    /// Validates that every value lies in `[0, 1]` and that they sum to exactly 1.
    pub fn new(shape: CubeShape, probs: BTreeMap<u64, Rational>) -> Result<Self> {
        let mut total = Rational::zero();
        for (&i, p) in &probs {
            shape.check_index(i)?;
            if p.is_negative() || p > &Rational::one() {
                return Err(Error::param(format!("{} is not a probability", fmt_ratio(p))));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::param(format!("probabilities sum to {}", fmt_ratio(&total))));
        }
        let probs = probs.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(Distribution { shape, probs })
    }

    /// Builds a law from a per-point function of the digit string.
    pub fn from_fn(shape: CubeShape, mut f: impl FnMut(&[u8]) -> Rational) -> Result<Self> {
        let mut digits = vec![0u8; shape.n()];
        let mut probs = BTreeMap::new();
        for i in 0..shape.size() {
            shape.digits_into(i, &mut digits);
            let p = f(&digits);
            if !p.is_zero() {
                probs.insert(i, p);
            }
        }
        Distribution::new(shape, probs)
    }

    /// Builds a law whose value depends only on the value counts of a point.
    pub fn from_class_fn(shape: CubeShape, mut f: impl FnMut(&[usize]) -> Rational) -> Result<Self> {
        let mut cache: HashMap<Vec<usize>, Rational> = HashMap::new();
        let k = shape.k();
        Distribution::from_fn(shape, |d| {
            let mut c = vec![0usize; k];
            for &v in d {
                c[v as usize - 1] += 1;
            }
            cache.entry(c).or_insert_with_key(|c| f(c)).clone()
        })
    }

    pub fn uniform(shape: CubeShape) -> Self {
        let p = ratio(1, shape.size());
        Distribution { shape, probs: (0..shape.size()).map(|i| (i, p.clone())).collect() }
    }

    pub fn point_mass(x: &Point) -> Self {
        Distribution { shape: x.shape(), probs: BTreeMap::from([(x.index(), Rational::one())]) }
    }

    pub fn equal_slices(shape: CubeShape) -> Self {
        Distribution::from_class_fn(shape, equal_slices_prob_counts).expect("equal-slices law is normalized")
    }

    pub fn nondegenerate_equal_slices(shape: CubeShape) -> Result<Self> {
        if shape.n() < shape.k() {
            return Err(Error::param("non-degenerate equal-slices needs n >= k"));
        }
        Distribution::from_class_fn(shape, nondegenerate_prob_counts)
    }

    pub fn shape(&self) -> CubeShape {
        self.shape
    }

    pub fn probs(&self) -> &BTreeMap<u64, Rational> {
        &self.probs
    }

    pub fn prob_index(&self, i: u64) -> Rational {
        self.probs.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn prob(&self, x: &Point) -> Rational {
        if x.shape() != self.shape {
            return Rational::zero();
        }
        self.prob_index(x.index())
    }

    pub fn support(&self) -> CubeSet {
        CubeSet::from_indices(self.shape, self.probs.keys().copied()).expect("support in range")
    }

    pub fn measure(&self, a: &CubeSet) -> Result<ExactProb> {
        if a.shape() != self.shape {
            return Err(Error::ShapeMismatch("set and distribution live in different cubes".into()));
        }
        let total = self
            .probs
            .iter()
            .filter(|(i, _)| a.contains_index(**i))
            .fold(Rational::zero(), |acc, (_, p)| acc + p);
        ExactProb::new(total)
    }

    /// `(1/2) Σ_x |p(x) - q(x)|`.
    pub fn tv_distance(&self, other: &Distribution) -> Result<ExactProb> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("total variation between different cubes".into()));
        }
        let mut sum = Rational::zero();
        for (i, p) in &self.probs {
            sum += (p - other.prob_index(*i)).abs();
        }
        for (i, q) in &other.probs {
            if !self.probs.contains_key(i) {
                sum += q;
            }
        }
        ExactProb::new(sum / Rational::from_integer(2.into()))
    }

    /// Total variation to an empirical histogram, in floating point.
    pub fn tv_to_empirical(&self, counts: &HashMap<u64, u64>, samples: u64) -> f64 {
        let n = samples as f64;
        let mut sum = 0.0;
        for (i, p) in &self.probs {
            let emp = counts.get(i).copied().unwrap_or(0) as f64 / n;
            sum += (to_f64(p) - emp).abs();
        }
        for (i, &c) in counts {
            if !self.probs.contains_key(i) {
                sum += c as f64 / n;
            }
        }
        sum / 2.0
    }

    pub fn to_file(&self) -> DistributionFile {
        DistributionFile {
            k: self.shape.k(),
            n: self.shape.n(),
            probs: self
                .probs
                .iter()
                .map(|(&i, p)| (self.shape.render(&self.shape.digits_of(i)), fmt_ratio(p)))
                .collect(),
        }
    }
}

/// JSON form: `{"k", "n", "probs": {"<point>": "p/q"}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub k: usize,
    pub n: usize,
    pub probs: BTreeMap<String, String>,
}

impl DistributionFile {
    pub fn into_distribution(self) -> Result<Distribution> {
        let shape = CubeShape::new(self.k, self.n)?;
        let mut probs = BTreeMap::new();
        for (p, v) in self.probs {
            let i = Point::parse(shape, &p)?.index();
            if probs.insert(i, parse_ratio(&v)?).is_some() {
                return Err(Error::Parse(format!("point {p} listed twice")));
            }
        }
        Distribution::new(shape, probs)
    }
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DistributionFile::deserialize(d)?
            .into_distribution()
            .map_err(serde::de::Error::custom)
    }
}
