use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest alphabet accepted. Digits are stored as `u8` and subspace
/// encodings need room for `k + d` symbols.
pub const MAX_ALPHABET: usize = 64;

/// The ambient grid `[k]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawShape")]
pub struct CubeShape {
    k: usize,
    n: usize,
}

#[derive(Deserialize)]
struct RawShape {
    k: usize,
    n: usize,
}

impl TryFrom<RawShape> for CubeShape {
    type Error = Error;
    fn try_from(raw: RawShape) -> Result<Self> {
        CubeShape::new(raw.k, raw.n)
    }
}

impl CubeShape {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidShape { k, n, reason: reason.into() };
        if k == 0 {
            return Err(invalid("alphabet size must be at least 1"));
        }
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if k > MAX_ALPHABET {
            return Err(invalid("alphabet too large"));
        }
        let n32 = u32::try_from(n).map_err(|_| invalid("dimension too large"))?;
        (k as u64)
            .checked_pow(n32)
            .ok_or_else(|| invalid("k^n does not fit in a 64-bit index"))?;
        Ok(CubeShape { k, n })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of points, `k^n`.
    pub fn size(&self) -> u64 {
        (self.k as u64).pow(self.n as u32)
    }

    /// The same dimension over a different alphabet.
    pub fn with_alphabet(&self, k: usize) -> Result<Self> {
        CubeShape::new(k, self.n)
    }

    pub fn with_dimension(&self, n: usize) -> Result<Self> {
        CubeShape::new(self.k, n)
    }

    /// Place value of coordinate `coord` (0-based) in the big-endian index.
    pub fn weight(&self, coord: usize) -> u64 {
        (self.k as u64).pow((self.n - 1 - coord) as u32)
    }

    pub fn weights(&self) -> Vec<u64> {
        (0..self.n).map(|c| self.weight(c)).collect()
    }

    /// Index of a digit string; digits are 1-based.
    pub fn index_of(&self, digits: &[u8]) -> u64 {
        debug_assert_eq!(digits.len(), self.n);
        digits
            .iter()
            .fold(0u64, |acc, &d| acc * self.k as u64 + (d as u64 - 1))
    }

    /// Writes the 1-based digits of `index` into `out`.
    pub fn digits_into(&self, mut index: u64, out: &mut [u8]) {
        debug_assert_eq!(out.len(), self.n);
        let k = self.k as u64;
        for slot in out.iter_mut().rev() {
            *slot = (index % k) as u8 + 1;
            index /= k;
        }
    }

    pub fn digits_of(&self, index: u64) -> Vec<u8> {
        let mut out = vec![0u8; self.n];
        self.digits_into(index, &mut out);
        out
    }

    pub fn check_index(&self, index: u64) -> Result<()> {
        if index >= self.size() {
            return Err(Error::IndexOutOfRange { index, size: self.size() });
        }
        Ok(())
    }

    /// Renders a digit string, compactly when every digit is a single character.
    pub fn render(&self, digits: &[u8]) -> String {
        render_digits(digits, self.k)
    }
}

pub(crate) fn render_digits(digits: &[u8], k: usize) -> String {
    if k <= 9 {
        digits.iter().map(|&d| char::from(b'0' + d)).collect()
    } else {
        let parts: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

/// Parses `"1231"` or `"(1,2,3,1)"` into 1-based digits (range unchecked).
pub(crate) fn parse_digits(s: &str) -> Result<Vec<u8>> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a digit string"));
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        inner
            .split(',')
            .map(|t| t.trim().parse::<u8>().map_err(|_| bad()))
            .collect()
    } else {
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(CubeShape::new(0, 3).is_err());
        assert!(CubeShape::new(3, 0).is_err());
        assert!(CubeShape::new(3, 41).is_err());
        assert!(CubeShape::new(3, 40).is_ok());
        assert!(CubeShape::new(2, 64).is_err());
        assert!(CubeShape::new(2, 63).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let s = CubeShape::new(3, 4).unwrap();
        for i in 0..s.size() {
            assert_eq!(s.index_of(&s.digits_of(i)), i);
        }
        assert_eq!(s.weights(), vec![27, 9, 3, 1]);
    }

    #[test]
    fn digit_strings() {
        assert_eq!(parse_digits("1231").unwrap(), vec![1, 2, 3, 1]);
        assert_eq!(parse_digits("(10, 2)").unwrap(), vec![10, 2]);
        assert!(parse_digits("1a").is_err());
        assert_eq!(render_digits(&[10, 2], 11), "(10,2)");
    }
}
