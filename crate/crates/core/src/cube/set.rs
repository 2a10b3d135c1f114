use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::point::Point;
use super::shape::CubeShape;
use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};

/// A subset of `[k]^n` stored as a bitset over point indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubeSet {
    shape: CubeShape,
    words: Vec<u64>,
}

impl CubeSet {
    pub fn empty(shape: CubeShape) -> Self {
        let words = vec![0u64; shape.size().div_ceil(64) as usize];
        CubeSet { shape, words }
    }

    pub fn full(shape: CubeShape) -> Self {
        let mut s = CubeSet::empty(shape);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.clear_tail();
        s
    }

    pub fn from_indices(shape: CubeShape, indices: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut s = CubeSet::empty(shape);
        for i in indices {
            shape.check_index(i)?;
            s.insert_index(i);
        }
        Ok(s)
    }

    pub fn from_points<'a>(shape: CubeShape, points: impl IntoIterator<Item = &'a Point>) -> Result<Self> {
        let mut s = CubeSet::empty(shape);
        for p in points {
            if p.shape() != shape {
                return Err(Error::ShapeMismatch(format!("point {p} does not live in [{}]^{}", shape.k(), shape.n())));
            }
            s.insert_index(p.index());
        }
        Ok(s)
    }

    /// The set of points whose digit string satisfies `pred`.
    pub fn from_predicate(shape: CubeShape, mut pred: impl FnMut(&[u8]) -> bool) -> Self {
        let mut s = CubeSet::empty(shape);
        let mut digits = vec![0u8; shape.n()];
        for i in 0..shape.size() {
            shape.digits_into(i, &mut digits);
            if pred(&digits) {
                s.insert_index(i);
            }
        }
        s
    }

    /// Each point included independently with probability `p`.
    pub fn random<R: Rng + ?Sized>(shape: CubeShape, p: f64, rng: &mut R) -> Self {
        let mut s = CubeSet::empty(shape);
        for i in 0..shape.size() {
            if rng.random::<f64>() < p {
                s.insert_index(i);
            }
        }
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.shape.size() % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn shape(&self) -> CubeShape {
        self.shape
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn contains_index(&self, i: u64) -> bool {
        i < self.shape.size() && self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.shape() == self.shape && self.contains_index(p.index())
    }

    #[inline]
    pub fn insert_index(&mut self, i: u64) {
        self.words[(i / 64) as usize] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn remove_index(&mut self, i: u64) {
        self.words[(i / 64) as usize] &= !(1u64 << (i % 64));
    }

    pub fn insert(&mut self, p: &Point) -> Result<()> {
        self.check_shape(p.shape())?;
        self.insert_index(p.index());
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Uniform density `|A| / k^n`.
    pub fn density(&self) -> Rational {
        ratio(self.len(), self.shape.size())
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(wi as u64 * 64 + b)
            })
        })
    }

    pub fn points(&self) -> Vec<Point> {
        self.iter()
            .map(|i| Point::from_index(self.shape, i).expect("member index in range"))
            .collect()
    }

    fn check_shape(&self, other: CubeShape) -> Result<()> {
        if other != self.shape {
            return Err(Error::ShapeMismatch(format!(
                "[{}]^{} vs [{}]^{}",
                self.shape.k(),
                self.shape.n(),
                other.k(),
                other.n()
            )));
        }
        Ok(())
    }

    fn zip(&self, other: &CubeSet, f: impl Fn(u64, u64) -> u64) -> Result<CubeSet> {
        self.check_shape(other.shape)?;
        let words = self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect();
        Ok(CubeSet { shape: self.shape, words })
    }

    pub fn union(&self, other: &CubeSet) -> Result<CubeSet> {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &CubeSet) -> Result<CubeSet> {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &CubeSet) -> Result<CubeSet> {
        self.zip(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> CubeSet {
        let mut s = CubeSet { shape: self.shape, words: self.words.iter().map(|w| !w).collect() };
        s.clear_tail();
        s
    }

    pub fn is_subset(&self, other: &CubeSet) -> bool {
        self.shape == other.shape && self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    pub fn intersection_len(&self, other: &CubeSet) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// Little-endian bytes of the bitset in hex; bit 0 of the first byte is index 0.
    pub fn to_hex(&self) -> String {
        let nbytes = self.shape.size().div_ceil(8) as usize;
        let mut out = String::with_capacity(2 * nbytes);
        for b in 0..nbytes {
            let byte = (self.words[b / 8] >> (8 * (b % 8))) as u8;
            write!(out, "{byte:02x}").expect("writing to a String");
        }
        out
    }

    pub fn from_hex(shape: CubeShape, hex: &str) -> Result<Self> {
        let hex = hex.trim();
        let nbytes = shape.size().div_ceil(8) as usize;
        if hex.len() != 2 * nbytes {
            return Err(Error::Parse(format!("bitset_hex must have {} hex digits, got {}", 2 * nbytes, hex.len())));
        }
        let mut s = CubeSet::empty(shape);
        for b in 0..nbytes {
            let byte = u8::from_str_radix(&hex[2 * b..2 * b + 2], 16)
                .map_err(|_| Error::Parse(format!("bad hex byte at offset {b}")))?;
            s.words[b / 8] |= (byte as u64) << (8 * (b % 8));
        }
        let before = s.len();
        s.clear_tail();
        if s.len() != before {
            return Err(Error::Parse("bitset_hex sets bits beyond k^n".into()));
        }
        Ok(s)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: CubeSetFile = serde_json::from_str(s)?;
        file.into_set()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file(false)).expect("set file serializes")
    }

    /// File representation; `hex` selects the bitset form.
    pub fn to_file(&self, hex: bool) -> CubeSetFile {
        let (points, bitset_hex) = if hex {
            (None, Some(self.to_hex()))
        } else {
            (Some(self.points().iter().map(|p| p.to_string()).collect()), None)
        };
        CubeSetFile { k: self.shape.k(), n: self.shape.n(), points, bitset_hex }
    }
}

/// The JSON form of a set: `{"k", "n", "points": [...]}` or `{"k", "n", "bitset_hex": "..."}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeSetFile {
    pub k: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bitset_hex: Option<String>,
}

impl CubeSetFile {
    pub fn into_set(self) -> Result<CubeSet> {
        let shape = CubeShape::new(self.k, self.n)?;
        match (self.points, self.bitset_hex) {
            (Some(points), None) => {
                let mut s = CubeSet::empty(shape);
                for p in points {
                    s.insert(&Point::parse(shape, &p)?)?;
                }
                Ok(s)
            }
            (None, Some(hex)) => CubeSet::from_hex(shape, &hex),
            (Some(_), Some(_)) => Err(Error::Parse("give either points or bitset_hex, not both".into())),
            (None, None) => Err(Error::Parse("set file needs points or bitset_hex".into())),
        }
    }
}

impl Serialize for CubeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file(false).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CubeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        CubeSetFile::deserialize(d)?.into_set().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn set_algebra() {
        let s = CubeShape::new(3, 3).unwrap();
        let a = CubeSet::from_indices(s, [0, 5, 26]).unwrap();
        let b = CubeSet::from_indices(s, [5, 7]).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.union(&b).unwrap().len(), 4);
        assert_eq!(a.intersection(&b).unwrap().iter().collect::<Vec<_>>(), vec![5]);
        assert_eq!(a.complement().len(), 24);
        assert_eq!(CubeSet::full(s).len(), 27);
        assert_eq!(a.density(), ratio(1, 9));
        assert!(CubeSet::from_indices(s, [27]).is_err());
    }

    #[test]
    fn json_forms_agree() {
        let s = CubeShape::new(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = CubeSet::random(s, 0.4, &mut rng);
            let pts = serde_json::to_string(&a.to_file(false)).unwrap();
            let hex = serde_json::to_string(&a.to_file(true)).unwrap();
            assert_eq!(CubeSet::from_json_str(&pts).unwrap(), a);
            assert_eq!(CubeSet::from_json_str(&hex).unwrap(), a);
        }
    }

    #[test]
    fn hex_is_little_endian() {
        let s = CubeShape::new(2, 4).unwrap();
        let a = CubeSet::from_indices(s, [0, 9]).unwrap();
        assert_eq!(a.to_hex(), "0102");
        let raw = r#"{"k":2,"n":2,"points":["11","22"]}"#;
        assert_eq!(CubeSet::from_json_str(raw).unwrap().iter().collect::<Vec<_>>(), vec![0, 3]);
        assert!(CubeSet::from_json_str(r#"{"k":2,"n":2,"bitset_hex":"1f"}"#).is_err());
        assert!(CubeSet::from_json_str(r#"{"k":2,"n":2,"points":["13"]}"#).is_err());
    }
}
