//! Exact rational helpers shared by every measure computation.
//!
//! All probabilities in this crate are `BigRational`s. Floating point only
//! appears in statistical sampler checks and in human-readable reports.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// A probability: an exact rational in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProb(Rational);

impl ExactProb {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value > Rational::one() {
            return Err(Error::param(format!("{} is not a probability", fmt_ratio(&value))));
        }
        Ok(ExactProb(value))
    }

    pub fn zero() -> Self {
        ExactProb(Rational::zero())
    }

    pub fn one() -> Self {
        ExactProb(Rational::one())
    }

    pub fn from_counts(num: u64, den: u64) -> Self {
        assert!(den > 0 && num <= den, "{num}/{den} is not a probability");
        ExactProb(ratio(num, den))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.0)
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_ratio(&self.0))
    }
}

impl Serialize for ExactProb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_ratio(&self.0))
    }
}

impl<'de> Deserialize<'de> for ExactProb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let r = parse_ratio(&s).map_err(serde::de::Error::custom)?;
        ExactProb::new(r).map_err(serde::de::Error::custom)
    }
}

impl FromStr for ExactProb {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExactProb::new(parse_ratio(s)?)
    }
}

impl From<ExactProb> for Rational {
    fn from(p: ExactProb) -> Rational {
        p.0
    }
}

/// Serde adapter for `Rational` fields written as `"p/q"` strings.
pub mod serde_ratio {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_ratio(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).map_err(serde::de::Error::custom)
    }
}

/// Canonical `"p/q"` form; the denominator is always written, even when it is 1.
pub fn fmt_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `"p/q"`, a plain integer, or a finite decimal such as `"0.125"`.
pub fn parse_ratio(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let whole = if whole_digits.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(whole_digits).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac = BigInt::from_str(frac).map_err(|_| bad())?;
        let magnitude = Rational::new(whole * &scale + frac, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad())
}

pub fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn big(v: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(v.clone()))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn multinomial(counts: &[usize]) -> BigUint {
    let mut total = 0u64;
    let mut acc = BigUint::one();
    for &c in counts {
        total += c as u64;
        acc *= binomial(total, c as u64);
    }
    acc
}

/// `n (n-1) ... (n-r+1)`, zero when `r > n`.
pub fn falling(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    (0..r).fold(BigUint::one(), |acc, i| acc * (n - i))
}

pub fn pow_ratio(base: &Rational, exp: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

/// Smallest integer `>= r`.
pub fn ceil(r: &Rational) -> BigInt {
    let (q, m) = r.numer().div_mod_floor(r.denom());
    if m.is_zero() {
        q
    } else {
        q + 1
    }
}

pub fn floor(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_ratio("3/8").unwrap(), ratio(3, 8));
        assert_eq!(parse_ratio("6/16").unwrap(), ratio(3, 8));
        assert_eq!(parse_ratio("2").unwrap(), int(2));
        assert_eq!(parse_ratio("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_ratio(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_ratio("1.25").unwrap(), ratio(5, 4));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
    }

    #[test]
    fn formatting_keeps_denominator() {
        assert_eq!(fmt_ratio(&int(1)), "1/1");
        assert_eq!(fmt_ratio(&ratio(0, 5)), "0/1");
        assert_eq!(fmt_ratio(&ratio(2, 6)), "1/3");
    }

    #[test]
    fn probabilities_are_bounded() {
        assert!(ExactProb::new(ratio(3, 2)).is_err());
        assert!(ExactProb::new(-ratio(1, 2)).is_err());
        let p: ExactProb = "1/5".parse().unwrap();
        assert_eq!(p.to_string(), "1/5");
    }

    #[test]
    fn combinatorial_counts() {
        assert_eq!(binomial(6, 2), BigUint::from(15u32));
        assert_eq!(binomial(2, 3), BigUint::zero());
        assert_eq!(multinomial(&[1, 1]), BigUint::from(2u32));
        assert_eq!(multinomial(&[2, 1, 1]), BigUint::from(12u32));
        assert_eq!(falling(5, 2), BigUint::from(20u32));
        assert_eq!(falling(2, 3), BigUint::zero());
        assert_eq!(ceil(&ratio(7, 2)), BigInt::from(4));
        assert_eq!(ceil(&int(3)), BigInt::from(3));
    }
}
