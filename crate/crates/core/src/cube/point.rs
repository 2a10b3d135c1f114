use std::fmt;

use super::shape::{parse_digits, CubeShape};
use crate::error::{Error, Result};

/// A point of `[k]^n`: `n` digits, each in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    shape: CubeShape,
    digits: Vec<u8>,
}

impl Point {
    pub fn new(shape: CubeShape, digits: Vec<u8>) -> Result<Self> {
        if digits.len() != shape.n() {
            return Err(Error::LengthMismatch { expected: shape.n(), got: digits.len() });
        }
        for (coord, &d) in digits.iter().enumerate() {
            if d == 0 || d as usize > shape.k() {
                return Err(Error::DigitOutOfRange { coord, digit: d as usize, k: shape.k() });
            }
        }
        Ok(Point { shape, digits })
    }

    /// Parses `"1231"` (or `"(1,2,3,1)"` for large alphabets) against `shape`.
    pub fn parse(shape: CubeShape, s: &str) -> Result<Self> {
        Point::new(shape, parse_digits(s)?)
    }

    pub fn from_index(shape: CubeShape, index: u64) -> Result<Self> {
        shape.check_index(index)?;
        Ok(Point { shape, digits: shape.digits_of(index) })
    }

    pub(crate) fn from_digits_unchecked(shape: CubeShape, digits: Vec<u8>) -> Self {
        Point { shape, digits }
    }

    pub fn shape(&self) -> CubeShape {
        self.shape
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn index(&self) -> u64 {
        self.shape.index_of(&self.digits)
    }

    /// `counts[j-1]` is the number of coordinates equal to `j`: the slice of the point.
    pub fn value_counts(&self) -> Vec<usize> {
        value_counts(&self.digits, self.shape.k())
    }

    /// Coordinates (0-based) holding value `j`.
    pub fn value_class(&self, j: u8) -> Vec<usize> {
        self.digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == j)
            .map(|(c, _)| c)
            .collect()
    }

    /// Rewrites every digit equal to `from` as `to`.
    pub fn substitute(&self, from: u8, to: u8) -> Result<Point> {
        let k = self.shape.k();
        for v in [from, to] {
            if v == 0 || v as usize > k {
                return Err(Error::param(format!("value {v} outside 1..={k}")));
            }
        }
        let digits = self
            .digits
            .iter()
            .map(|&d| if d == from { to } else { d })
            .collect();
        Ok(Point { shape: self.shape, digits })
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.shape.render(&self.digits))
    }
}

pub(crate) fn value_counts(digits: &[u8], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for &d in digits {
        counts[d as usize - 1] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(k: usize, n: usize) -> CubeShape {
        CubeShape::new(k, n).unwrap()
    }

    #[test]
    fn index_examples() {
        assert_eq!(Point::parse(shape(2, 2), "11").unwrap().index(), 0);
        assert_eq!(Point::parse(shape(2, 2), "22").unwrap().index(), 3);
        assert!(Point::from_index(shape(2, 2), 4).is_err());
    }

    #[test]
    fn index_bijection_small_shapes() {
        for k in 1..=4 {
            for n in 1..=4 {
                let s = shape(k, n);
                for i in 0..s.size() {
                    let p = Point::from_index(s, i).unwrap();
                    assert_eq!(p.index(), i);
                    assert_eq!(Point::parse(s, &p.to_string()).unwrap(), p);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_digits() {
        assert!(Point::parse(shape(3, 2), "14").is_err());
        assert!(Point::parse(shape(3, 2), "0").is_err());
        assert!(Point::parse(shape(3, 2), "123").is_err());
    }

    #[test]
    fn substitution() {
        let s = shape(3, 4);
        let x = Point::parse(s, "1231").unwrap();
        assert_eq!(x.substitute(1, 2).unwrap().to_string(), "2232");
        let y = Point::parse(shape(3, 2), "33").unwrap();
        assert_eq!(y.substitute(3, 1).unwrap().to_string(), "11");
        for i in 0..s.size() {
            let p = Point::from_index(s, i).unwrap();
            for v in 1..=3 {
                assert_eq!(p.substitute(v, v).unwrap(), p);
                let once = p.substitute(v, 1).unwrap();
                assert_eq!(once.substitute(v, 1).unwrap(), once);
            }
        }
    }

    #[test]
    fn slices_and_classes() {
        let x = Point::parse(shape(3, 5), "13313").unwrap();
        assert_eq!(x.value_counts(), vec![2, 0, 3]);
        assert_eq!(x.value_class(3), vec![1, 2, 4]);
    }
}
