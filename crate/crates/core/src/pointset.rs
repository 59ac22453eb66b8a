//! Fixed-width bit sets over the points of AG(n,3), n <= 4.
//!
//! 3^4 = 81 points fit in a single `u128`, so every set operation is a
//! handful of machine instructions. A `PointSet` does not know its
//! dimension; callers pair it with a [`Dimension`](crate::Dimension).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{BitAnd, BitAndAssign, BitOr, BitOrAssign, BitXor, Not, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::Point;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PointSet(u128);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    #[inline]
    pub const fn from_bits(bits: u128) -> Self {
        PointSet(bits)
    }

    #[inline]
    pub const fn bits(self) -> u128 {
        self.0
    }

    /// The set `{0, 1, ..., size - 1}`.
    #[inline]
    pub const fn full(size: usize) -> Self {
        if size >= 128 {
            PointSet(u128::MAX)
        } else {
            PointSet((1u128 << size) - 1)
        }
    }

    #[inline]
    pub const fn singleton(p: Point) -> Self {
        PointSet(1u128 << p.index())
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut bits = 0u128;
        for i in indices {
            assert!(i < 128, "point index {i} does not fit a point set");
            bits |= 1u128 << i;
        }
        PointSet(bits)
    }

    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Self {
        Self::from_indices(points.into_iter().map(Point::index))
    }

    #[inline]
    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub const fn contains(self, p: Point) -> bool {
        self.0 >> p.index() & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, p: Point) {
        self.0 |= 1u128 << p.index();
    }

    #[inline]
    pub fn remove(&mut self, p: Point) {
        self.0 &= !(1u128 << p.index());
    }

    #[inline]
    pub const fn with(self, p: Point) -> Self {
        PointSet(self.0 | 1u128 << p.index())
    }

    #[inline]
    pub const fn without(self, p: Point) -> Self {
        PointSet(self.0 & !(1u128 << p.index()))
    }

    #[inline]
    pub const fn is_disjoint(self, other: PointSet) -> bool {
        self.0 & other.0 == 0
    }

    #[inline]
    pub const fn is_subset(self, other: PointSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Complement relative to a universe of `size` points.
    #[inline]
    pub const fn complement(self, size: usize) -> Self {
        PointSet(!self.0 & Self::full(size).0)
    }

    #[inline]
    pub fn min(self) -> Option<Point> {
        (self.0 != 0).then(|| Point::new_unchecked(self.0.trailing_zeros() as u8))
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    pub fn to_indices(self) -> Vec<usize> {
        self.iter().map(Point::index).collect()
    }

    /// Lexicographic comparison of the ascending index lists.
    pub fn lex_cmp(self, other: PointSet) -> Ordering {
        if self.len() == other.len() {
            // With equal sizes the first difference decides: the list holding
            // the smallest differing element is the smaller one.
            let diff = self.0 ^ other.0;
            if diff == 0 {
                return Ordering::Equal;
            }
            let low = 1u128 << diff.trailing_zeros();
            return if self.0 & low != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            };
        }
        self.iter().cmp(other.iter())
    }
}

/// Ascending iterator over the members of a [`PointSet`].
#[derive(Clone)]
pub struct Iter(u128);

impl Iterator for Iter {
    type Item = Point;

    #[inline]
    fn next(&mut self) -> Option<Point> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(Point::new_unchecked(i as u8))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter {}

impl IntoIterator for PointSet {
    type Item = Point;
    type IntoIter = Iter;

    fn into_iter(self) -> Iter {
        self.iter()
    }
}

impl FromIterator<Point> for PointSet {
    fn from_iter<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        PointSet::from_points(iter)
    }
}

impl BitOr for PointSet {
    type Output = PointSet;
    fn bitor(self, rhs: PointSet) -> PointSet {
        PointSet(self.0 | rhs.0)
    }
}

impl BitOrAssign for PointSet {
    fn bitor_assign(&mut self, rhs: PointSet) {
        self.0 |= rhs.0;
    }
}

impl BitAnd for PointSet {
    type Output = PointSet;
    fn bitand(self, rhs: PointSet) -> PointSet {
        PointSet(self.0 & rhs.0)
    }
}

impl BitAndAssign for PointSet {
    fn bitand_assign(&mut self, rhs: PointSet) {
        self.0 &= rhs.0;
    }
}

impl BitXor for PointSet {
    type Output = PointSet;
    fn bitxor(self, rhs: PointSet) -> PointSet {
        PointSet(self.0 ^ rhs.0)
    }
}

impl Sub for PointSet {
    type Output = PointSet;
    fn sub(self, rhs: PointSet) -> PointSet {
        PointSet(self.0 & !rhs.0)
    }
}

/// Complement within the full 128-bit word; prefer [`PointSet::complement`].
impl Not for PointSet {
    type Output = PointSet;
    fn not(self) -> PointSet {
        PointSet(!self.0)
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(Point::index)).finish()
    }
}

impl Serialize for PointSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(|p| p.index() as u8))
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let indices = Vec::<u8>::deserialize(deserializer)?;
        let mut set = PointSet::EMPTY;
        for i in indices {
            if i >= 81 {
                return Err(serde::de::Error::custom(format!(
                    "point index {i} out of range"
                )));
            }
            let p = Point::new_unchecked(i);
            if set.contains(p) {
                return Err(serde::de::Error::custom(format!(
                    "duplicate point index {i}"
                )));
            }
            set.insert(p);
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(bits: u128) -> PointSet {
        PointSet::from_bits(bits & PointSet::full(81).bits())
    }

    #[test]
    fn basics() {
        let s = PointSet::from_indices([3, 0, 80]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.to_indices(), vec![0, 3, 80]);
        assert_eq!(s.min().map(Point::index), Some(0));
        assert!(PointSet::EMPTY.min().is_none());
        assert_eq!(s.complement(81).len(), 78);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[0,3,80]");
        let back: PointSet = serde_json::from_str("[80,3,0]").unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<PointSet>("[1,1]").is_err());
        assert!(serde_json::from_str::<PointSet>("[81]").is_err());
    }

    proptest! {
        #[test]
        fn boolean_algebra(a in any::<u128>(), b in any::<u128>(), c in any::<u128>()) {
            let (a, b, c) = (set(a), set(b), set(c));
            prop_assert_eq!(a & (b | c), (a & b) | (a & c));
            prop_assert_eq!((a | b).complement(81), a.complement(81) & b.complement(81));
            prop_assert_eq!(a - b, a & b.complement(81));
            prop_assert_eq!((a | b).len() + (a & b).len(), a.len() + b.len());
            prop_assert_eq!(a.complement(81).complement(81), a);
        }

        #[test]
        fn lex_cmp_matches_sorted_lists(a in any::<u128>(), b in any::<u128>()) {
            let (a, b) = (set(a), set(b));
            prop_assert_eq!(a.lex_cmp(b), a.to_indices().cmp(&b.to_indices()));
        }

        #[test]
        fn lex_cmp_equal_sizes(a in any::<u128>(), shift in 0u32..81) {
            let a = set(a);
            let b = set(a.bits().rotate_left(shift));
            prop_assert_eq!(a.lex_cmp(b), a.to_indices().cmp(&b.to_indices()));
        }
    }
}
