use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::line::{LinePattern, Symbol};
use super::point::Point;
use super::set::CubeSet;
use super::shape::CubeShape;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Fixed(u8),
    /// Member of wildcard set `W_{r+1}` (0-based `r`).
    Wild(usize),
}

/// A `d`-dimensional combinatorial subspace of `[k]^n`.
///
/// The wildcard sets form an ordered sequence, so the map to `[k+d]^n`
/// (wildcard set `r` written as the symbol `k + r`) is a bijection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    shape: CubeShape,
    slots: Vec<Slot>,
    dim: usize,
}

impl Subspace {
    /// Builds a subspace from 0-based coordinates: `fixed` maps coordinate to
    /// value and `wildcards[r]` lists the coordinates of `W_{r+1}`.
    pub fn new(shape: CubeShape, fixed: &BTreeMap<usize, u8>, wildcards: &[Vec<usize>]) -> Result<Self> {
        let mut slots: Vec<Option<Slot>> = vec![None; shape.n()];
        let mut place = |coord: usize, slot: Slot| -> Result<()> {
            let cell = slots
                .get_mut(coord)
                .ok_or_else(|| Error::InvalidSubspace(format!("coordinate {} out of range", coord + 1)))?;
            if cell.is_some() {
                return Err(Error::InvalidSubspace(format!("coordinate {} assigned twice", coord + 1)));
            }
            *cell = Some(slot);
            Ok(())
        };
        for (&c, &v) in fixed {
            if v == 0 || v as usize > shape.k() {
                return Err(Error::DigitOutOfRange { coord: c, digit: v as usize, k: shape.k() });
            }
            place(c, Slot::Fixed(v))?;
        }
        for (r, set) in wildcards.iter().enumerate() {
            for &c in set {
                place(c, Slot::Wild(r))?;
            }
        }
        let slots = slots
            .into_iter()
            .enumerate()
            .map(|(c, s)| s.ok_or_else(|| Error::InvalidSubspace(format!("coordinate {} unassigned", c + 1))))
            .collect::<Result<Vec<_>>>()?;
        Subspace::from_slots(shape, slots, wildcards.len())
    }

    /// Validates a slot vector: `dim >= 1` and every wildcard set nonempty.
    pub fn from_slots(shape: CubeShape, slots: Vec<Slot>, dim: usize) -> Result<Self> {
        let s = Subspace::from_slots_allow_degenerate(shape, slots, dim)?;
        if s.is_degenerate() {
            return Err(Error::InvalidSubspace("empty wildcard set".into()));
        }
        Ok(s)
    }

    pub(crate) fn from_slots_allow_degenerate(shape: CubeShape, slots: Vec<Slot>, dim: usize) -> Result<Self> {
        if slots.len() != shape.n() {
            return Err(Error::LengthMismatch { expected: shape.n(), got: slots.len() });
        }
        if dim == 0 {
            return Err(Error::InvalidSubspace("dimension must be at least 1".into()));
        }
        for (c, slot) in slots.iter().enumerate() {
            match *slot {
                Slot::Fixed(v) if v == 0 || v as usize > shape.k() => {
                    return Err(Error::DigitOutOfRange { coord: c, digit: v as usize, k: shape.k() })
                }
                Slot::Wild(r) if r >= dim => {
                    return Err(Error::InvalidSubspace(format!("wildcard label {} exceeds dimension {dim}", r + 1)))
                }
                _ => {}
            }
        }
        Ok(Subspace { shape, slots, dim })
    }

    /// Reads a point of `[k+d]^n` as a `d`-dimensional subspace of `[k]^n`.
    pub fn from_encoding(code: &Point, k: usize, allow_degenerate: bool) -> Result<Self> {
        let big = code.shape();
        if big.k() <= k {
            return Err(Error::param("encoding alphabet must exceed k"));
        }
        let dim = big.k() - k;
        let shape = big.with_alphabet(k)?;
        let slots = code
            .digits()
            .iter()
            .map(|&d| if (d as usize) <= k { Slot::Fixed(d) } else { Slot::Wild(d as usize - k - 1) })
            .collect();
        if allow_degenerate {
            Subspace::from_slots_allow_degenerate(shape, slots, dim)
        } else {
            Subspace::from_slots(shape, slots, dim)
        }
    }

    /// Reads a point of `[d]^n` as a special subspace (no fixed coordinates),
    /// wildcard set `r` being the coordinates equal to `r`.
    pub fn special_from_point(shape: CubeShape, code: &Point) -> Result<Self> {
        if code.shape().n() != shape.n() {
            return Err(Error::DimensionMismatch { expected: shape.n(), got: code.shape().n() });
        }
        let slots = code.digits().iter().map(|&d| Slot::Wild(d as usize - 1)).collect();
        Subspace::from_slots(shape, slots, code.shape().k())
    }

    /// The whole cube with singleton wildcard sets in coordinate order.
    pub fn identity(shape: CubeShape) -> Self {
        Subspace { shape, slots: (0..shape.n()).map(Slot::Wild).collect(), dim: shape.n() }
    }

    /// `S_{J,y}`: singleton wildcard sets on the coordinates of `free` (in
    /// increasing order) and the remaining coordinates fixed to `tail`, listed
    /// in coordinate order.
    pub fn with_free_coordinates(shape: CubeShape, free: &[usize], tail: &[u8]) -> Result<Self> {
        let mut sorted = free.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != free.len() || sorted.last().is_some_and(|&c| c >= shape.n()) {
            return Err(Error::InvalidSubspace("free coordinates must be distinct and in range".into()));
        }
        if tail.len() + sorted.len() != shape.n() {
            return Err(Error::LengthMismatch { expected: shape.n() - sorted.len(), got: tail.len() });
        }
        let mut slots = Vec::with_capacity(shape.n());
        let mut tail_iter = tail.iter();
        let mut r = 0;
        for c in 0..shape.n() {
            if sorted.binary_search(&c).is_ok() {
                slots.push(Slot::Wild(r));
                r += 1;
            } else {
                slots.push(Slot::Fixed(*tail_iter.next().expect("length checked")));
            }
        }
        Subspace::from_slots(shape, slots, sorted.len())
    }

    pub fn from_line(line: &LinePattern) -> Result<Self> {
        let slots = line
            .symbols()
            .iter()
            .map(|s| match *s {
                Symbol::Fixed(d) => Slot::Fixed(d),
                Symbol::Wildcard => Slot::Wild(0),
            })
            .collect();
        Subspace::from_slots(line.shape(), slots, 1)
    }

    /// A one-dimensional subspace read back as a line pattern.
    pub fn to_line(&self) -> Result<LinePattern> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.dim });
        }
        let symbols = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Fixed(d) => Symbol::Fixed(d),
                Slot::Wild(_) => Symbol::Wildcard,
            })
            .collect();
        LinePattern::new(self.shape, symbols)
    }

    pub fn shape(&self) -> CubeShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// The ambient shape of the parameter cube `[k]^d`.
    pub fn domain(&self) -> CubeShape {
        CubeShape::new(self.shape.k(), self.dim).expect("dimension bounded by the ambient cube")
    }

    pub fn is_degenerate(&self) -> bool {
        self.wildcard_sets().iter().any(|w| w.is_empty())
    }

    pub fn fixed(&self) -> BTreeMap<usize, u8> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(c, s)| match *s {
                Slot::Fixed(v) => Some((c, v)),
                Slot::Wild(_) => None,
            })
            .collect()
    }

    pub fn wildcard_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.dim];
        for (c, s) in self.slots.iter().enumerate() {
            if let Slot::Wild(r) = *s {
                sets[r].push(c);
            }
        }
        sets
    }

    pub fn encoding(&self) -> Point {
        let k = self.shape.k();
        let big = self.shape.with_alphabet(k + self.dim).expect("encoding alphabet in range");
        let digits = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Fixed(v) => v,
                Slot::Wild(r) => (k + 1 + r) as u8,
            })
            .collect();
        Point::from_digits_unchecked(big, digits)
    }

    /// Index of the image of `1...1` and the index step of each parameter.
    pub fn index_layout(&self) -> (u64, Vec<u64>) {
        let mut base = 0u64;
        let mut steps = vec![0u64; self.dim];
        for (c, s) in self.slots.iter().enumerate() {
            let w = self.shape.weight(c);
            match *s {
                Slot::Fixed(v) => base += (v as u64 - 1) * w,
                Slot::Wild(r) => steps[r] += w,
            }
        }
        (base, steps)
    }

    /// The isomorphism `[k]^d -> V`.
    pub fn embed(&self, z: &Point) -> Result<Point> {
        if z.shape().n() != self.dim || z.shape().k() != self.shape.k() {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.shape().n() });
        }
        let digits = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Fixed(v) => v,
                Slot::Wild(r) => z.digits()[r],
            })
            .collect();
        Ok(Point::from_digits_unchecked(self.shape, digits))
    }

    /// Ambient indices of the embedded points, in the index order of `[k]^d`.
    pub fn point_indices(&self) -> Vec<u64> {
        let (base, steps) = self.index_layout();
        let k = self.shape.k() as u64;
        let mut out = Vec::with_capacity(k.pow(self.dim as u32) as usize);
        let mut digits = vec![0u64; self.dim];
        let mut idx = base;
        loop {
            out.push(idx);
            // odometer over [k]^d, last parameter fastest
            let mut r = self.dim;
            loop {
                if r == 0 {
                    return out;
                }
                r -= 1;
                if digits[r] + 1 < k {
                    digits[r] += 1;
                    idx += steps[r];
                    break;
                }
                idx -= digits[r] * steps[r];
                digits[r] = 0;
            }
        }
    }

    pub fn points(&self) -> Vec<Point> {
        self.point_indices()
            .into_iter()
            .map(|i| Point::from_digits_unchecked(self.shape, self.shape.digits_of(i)))
            .collect()
    }

    /// The points of the subspace as a set.
    pub fn to_set(&self) -> CubeSet {
        let mut s = CubeSet::empty(self.shape);
        for i in self.point_indices() {
            s.insert_index(i);
        }
        s
    }

    /// `{z in [k]^d : embed(z) in set}`.
    pub fn pullback(&self, set: &CubeSet) -> Result<CubeSet> {
        if set.shape() != self.shape {
            return Err(Error::ShapeMismatch("pullback of a set from another cube".into()));
        }
        let mut out = CubeSet::empty(self.domain());
        for (z, i) in self.point_indices().into_iter().enumerate() {
            if set.contains_index(i) {
                out.insert_index(z as u64);
            }
        }
        Ok(out)
    }

    /// Is every point of the subspace in `set`?
    pub fn is_contained_in(&self, set: &CubeSet) -> bool {
        set.shape() == self.shape && self.point_indices().into_iter().all(|i| set.contains_index(i))
    }

    /// Composes with a subspace of the parameter cube `[k]^d`, giving a
    /// subspace of the ambient cube of dimension `inner.dim()`.
    pub fn compose(&self, inner: &Subspace) -> Result<Subspace> {
        if inner.shape != self.domain() {
            return Err(Error::ShapeMismatch("inner subspace must live in the parameter cube".into()));
        }
        let slots = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Fixed(v) => Slot::Fixed(v),
                Slot::Wild(r) => inner.slots[r],
            })
            .collect();
        Subspace::from_slots_allow_degenerate(self.shape, slots, inner.dim)
    }

    /// Maps a line of the parameter cube to the ambient cube.
    pub fn map_line(&self, line: &LinePattern) -> Result<LinePattern> {
        if line.shape() != self.domain() {
            return Err(Error::ShapeMismatch("line must live in the parameter cube".into()));
        }
        let symbols = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Fixed(v) => Symbol::Fixed(v),
                Slot::Wild(r) => line.symbols()[r],
            })
            .collect();
        LinePattern::new(self.shape, symbols)
    }
}

impl fmt::Display for Subspace {
    /// Fixed digits as themselves, wildcard set `r` as the letter `a + r`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<String> = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Fixed(v) => v.to_string(),
                Slot::Wild(r) if r < 26 => char::from(b'a' + r as u8).to_string(),
                Slot::Wild(r) => format!("w{}", r + 1),
            })
            .collect();
        if self.shape.k() <= 9 && self.dim <= 26 {
            f.write_str(&tokens.concat())
        } else {
            write!(f, "({})", tokens.join(","))
        }
    }
}

impl Serialize for Subspace {
    /// Coordinates are written 1-based.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let fixed: BTreeMap<String, u8> = self.fixed().into_iter().map(|(c, v)| ((c + 1).to_string(), v)).collect();
        let wild: Vec<Vec<usize>> = self
            .wildcard_sets()
            .into_iter()
            .map(|w| w.into_iter().map(|c| c + 1).collect())
            .collect();
        let mut st = s.serialize_struct("Subspace", 4)?;
        st.serialize_field("pattern", &self.to_string())?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("fixed", &fixed)?;
        st.serialize_field("wildcards", &wild)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(k: usize, n: usize) -> CubeShape {
        CubeShape::new(k, n).unwrap()
    }

    #[test]
    fn identity_embeds_identically() {
        let s = shape(3, 3);
        let v = Subspace::identity(s);
        for i in 0..s.size() {
            let z = Point::from_index(s, i).unwrap();
            assert_eq!(v.embed(&z).unwrap(), z);
        }
    }

    #[test]
    fn substitution_rule_example() {
        // fixed coordinate 2 = 3, W_1 = {1, 3}
        let fixed = BTreeMap::from([(1usize, 3u8)]);
        let v = Subspace::new(shape(3, 3), &fixed, &[vec![0, 2]]).unwrap();
        let z = Point::parse(shape(3, 1), "2").unwrap();
        assert_eq!(v.embed(&z).unwrap().to_string(), "232");
        assert_eq!(v.to_string(), "a3a");
        assert_eq!(v.encoding().to_string(), "434");
    }

    #[test]
    fn embedding_is_injective() {
        let fixed = BTreeMap::from([(2usize, 1u8)]);
        let v = Subspace::new(shape(3, 5), &fixed, &[vec![0, 4], vec![1, 3]]).unwrap();
        let mut idx = v.point_indices();
        assert_eq!(idx.len(), 9);
        for (zi, &ai) in idx.iter().enumerate() {
            let z = Point::from_index(v.domain(), zi as u64).unwrap();
            assert_eq!(v.embed(&z).unwrap().index(), ai);
        }
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 9);
    }

    #[test]
    fn rejects_invalid_structures() {
        let s = shape(3, 3);
        assert!(Subspace::new(s, &BTreeMap::new(), &[vec![0, 1]]).is_err());
        assert!(Subspace::new(s, &BTreeMap::new(), &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(Subspace::new(s, &BTreeMap::from([(0, 1)]), &[vec![1, 2], vec![]]).is_err());
        assert!(Subspace::new(s, &BTreeMap::from([(0, 4)]), &[vec![1, 2]]).is_err());
        let code = Point::parse(shape(5, 3), "141").unwrap();
        assert!(Subspace::from_encoding(&code, 3, false).is_err());
        assert!(Subspace::from_encoding(&code, 3, true).unwrap().is_degenerate());
    }

    #[test]
    fn encoding_round_trip_and_composition() {
        let big = shape(5, 4);
        for i in 0..big.size() {
            let code = Point::from_index(big, i).unwrap();
            if let Ok(v) = Subspace::from_encoding(&code, 3, false) {
                assert_eq!(v.encoding(), code);
                let id = Subspace::identity(v.domain());
                assert_eq!(v.compose(&id).unwrap(), v);
            }
        }
        let outer = Subspace::with_free_coordinates(shape(3, 4), &[0, 2, 3], &[2]).unwrap();
        assert_eq!(outer.to_string(), "a2bc");
        let inner = Subspace::new(shape(3, 3), &BTreeMap::from([(1, 3)]), &[vec![0, 2]]).unwrap();
        let both = outer.compose(&inner).unwrap();
        assert_eq!(both.to_string(), "a23a");
        let mut a = both.point_indices();
        let mut b: Vec<u64> = inner
            .point_indices()
            .into_iter()
            .map(|i| outer.point_indices()[i as usize])
            .collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn line_conversion() {
        let l = LinePattern::parse(shape(3, 3), "*1*").unwrap();
        let v = Subspace::from_line(&l).unwrap();
        assert_eq!(v.to_line().unwrap(), l);
        let mapped = Subspace::identity(shape(3, 3)).map_line(&l).unwrap();
        assert_eq!(mapped, l);
    }
}
