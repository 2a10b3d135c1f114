use std::fmt;

use super::point::Point;
use super::shape::CubeShape;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Fixed(u8),
    Wildcard,
}

/// A combinatorial line of `[k]^n`, written as a word over `[k] ∪ {*}`.
///
/// Patterns without a wildcard are degenerate: they are representable (the
/// bijection with `[k+1]^n` needs them) and [`LinePattern::is_degenerate`]
/// reports them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinePattern {
    shape: CubeShape,
    symbols: Vec<Symbol>,
}

impl LinePattern {
    pub fn new(shape: CubeShape, symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.len() != shape.n() {
            return Err(Error::LengthMismatch { expected: shape.n(), got: symbols.len() });
        }
        for (coord, s) in symbols.iter().enumerate() {
            if let Symbol::Fixed(d) = *s {
                if d == 0 || d as usize > shape.k() {
                    return Err(Error::DigitOutOfRange { coord, digit: d as usize, k: shape.k() });
                }
            }
        }
        Ok(LinePattern { shape, symbols })
    }

    /// Parses `"*1*"` or `"(*,3,*,2,2,*,1,2)"`.
    pub fn parse(shape: CubeShape, s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("`{s}` is not a line pattern"));
        let tokens: Vec<String> = match s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            Some(inner) => inner.split(',').map(|t| t.trim().to_string()).collect(),
            None => s.chars().map(|c| c.to_string()).collect(),
        };
        let symbols = tokens
            .iter()
            .map(|t| {
                if t == "*" {
                    Ok(Symbol::Wildcard)
                } else {
                    t.parse::<u8>().map(Symbol::Fixed).map_err(|_| bad())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        LinePattern::new(shape, symbols)
    }

    /// Reads a point of `[k+1]^n` as a line of `[k]^n`: digits equal to `k+1`
    /// become wildcards.
    pub fn from_point(y: &Point) -> Result<Self> {
        let big = y.shape();
        if big.k() < 2 {
            return Err(Error::param("line encodings live over an alphabet of size at least 2"));
        }
        let shape = big.with_alphabet(big.k() - 1)?;
        let wild = big.k() as u8;
        let symbols = y
            .digits()
            .iter()
            .map(|&d| if d == wild { Symbol::Wildcard } else { Symbol::Fixed(d) })
            .collect();
        Ok(LinePattern { shape, symbols })
    }

    /// The inverse of [`LinePattern::from_point`].
    pub fn to_point(&self) -> Point {
        let big = self
            .shape
            .with_alphabet(self.shape.k() + 1)
            .expect("alphabet below the supported maximum");
        let wild = big.k() as u8;
        let digits = self
            .symbols
            .iter()
            .map(|s| match *s {
                Symbol::Fixed(d) => d,
                Symbol::Wildcard => wild,
            })
            .collect();
        Point::from_digits_unchecked(big, digits)
    }

    /// Position of the pattern in the `[k+1]^n` encoding; the search order.
    pub fn encoding_index(&self) -> u64 {
        self.to_point().index()
    }

    pub fn shape(&self) -> CubeShape {
        self.shape
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn wildcard_set(&self) -> Vec<usize> {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Symbol::Wildcard)
            .map(|(c, _)| c)
            .collect()
    }

    pub fn is_degenerate(&self) -> bool {
        !self.symbols.contains(&Symbol::Wildcard)
    }

    /// The point obtained by setting every wildcard to `j`.
    pub fn point(&self, j: u8) -> Point {
        let digits = self
            .symbols
            .iter()
            .map(|s| match *s {
                Symbol::Fixed(d) => d,
                Symbol::Wildcard => j,
            })
            .collect();
        Point::from_digits_unchecked(self.shape, digits)
    }

    /// The `k` points of the line, the `j`-th with all wildcards set to `j`.
    pub fn points(&self) -> Vec<Point> {
        (1..=self.shape.k() as u8).map(|j| self.point(j)).collect()
    }

    /// Index of the first point and the index step between consecutive points.
    pub fn index_progression(&self) -> (u64, u64) {
        let mut base = 0u64;
        let mut step = 0u64;
        for (c, s) in self.symbols.iter().enumerate() {
            let w = self.shape.weight(c);
            match *s {
                Symbol::Fixed(d) => base += (d as u64 - 1) * w,
                Symbol::Wildcard => step += w,
            }
        }
        (base, step)
    }

    pub fn point_indices(&self) -> Vec<u64> {
        let (base, step) = self.index_progression();
        (0..self.shape.k() as u64).map(|j| base + j * step).collect()
    }
}

impl fmt::Display for LinePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<String> = self
            .symbols
            .iter()
            .map(|s| match s {
                Symbol::Fixed(d) => d.to_string(),
                Symbol::Wildcard => "*".to_string(),
            })
            .collect();
        if self.shape.k() <= 9 {
            f.write_str(&tokens.concat())
        } else {
            write!(f, "({})", tokens.join(","))
        }
    }
}
