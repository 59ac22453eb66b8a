//! Cap predicates, anchors and the maximal caps of AG(n,3) for n <= 4.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dimension, Point};
use crate::pointset::PointSet;
use crate::search::{self, blocked_by};

/// Largest cap sizes for n = 1..=4. These are assertions checked against
/// search results, never used in place of a search.
pub const KNOWN_MAX_CAP_SIZES: [usize; 4] = [2, 4, 9, 20];

/// Expected maximal-cap size in `dim`.
pub fn known_max_cap_size(dim: Dimension) -> usize {
    KNOWN_MAX_CAP_SIZES[dim.n() - 1]
}

pub fn is_cap(dim: Dimension, s: PointSet) -> bool {
    blocked_by(dim.space(), s).is_disjoint(s)
}

/// A cap no external point can be added to.
pub fn is_complete_cap(dim: Dimension, s: PointSet) -> Result<bool> {
    let blocked = blocked_by(dim.space(), s);
    if !blocked.is_disjoint(s) {
        return Err(Error::Precondition("input is not a cap".into()));
    }
    Ok((s | blocked) == dim.universe())
}

/// Coordinate-wise sum mod 3.
pub fn cap_sum(dim: Dimension, s: PointSet) -> Point {
    dim.space().sum(s)
}

/// Largest k admitting a k-cap, by search. For n = 4 this finds a 20-cap
/// and then rules out 21-caps exhaustively (see
/// [`search::structured_cap_search`]).
pub fn max_cap_size(dim: Dimension) -> usize {
    if dim.n() <= 3 {
        return search::largest_cap_size(dim);
    }
    let has = |k| search::structured_cap_search(k).found.is_some();
    let mut k = 19;
    while has(k + 1) {
        k += 1;
    }
    k
}

/// A maximal cap of AG(2,3) or AG(4,3) split into pairs on lines through
/// its anchor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnchorDecomposition {
    pub anchor: Point,
    pub pairs: Vec<[Point; 2]>,
}

/// The anchor of a maximal cap is minus the sum of its points; every cap
/// point pairs with the third point of its line through the anchor.
pub fn anchor_of(dim: Dimension, s: PointSet) -> Result<AnchorDecomposition> {
    if dim.n() % 2 == 1 {
        return Err(Error::NoAnchor(dim.get()));
    }
    check_maximal(dim, s)?;
    let space = dim.space();
    // the cap splits into k/2 pairs through the anchor, so sum = -(k/2)*anchor
    let sum = space.sum(s);
    let anchor = match (s.len() / 2) % 3 {
        1 => space.neg(sum),
        2 => sum,
        _ => {
            return Err(Error::InvariantViolation(
                "cap size gives no anchor equation".into(),
            ))
        }
    };
    if s.contains(anchor) {
        return Err(Error::InvariantViolation(format!(
            "anchor {anchor} lies in the cap"
        )));
    }
    let mut pairs = Vec::new();
    let mut rest = s;
    while let Some(p) = rest.min() {
        let q = space.third_unchecked(anchor, p);
        if !rest.contains(q) || q == p {
            return Err(Error::InvariantViolation(format!(
                "cap point {p} has no partner through anchor {anchor}"
            )));
        }
        rest = rest.without(p).without(q);
        pairs.push([p, q]);
    }
    Ok(AnchorDecomposition { anchor, pairs })
}

/// Shorthand for `anchor_of(..).anchor`.
pub fn anchor_point(dim: Dimension, s: PointSet) -> Result<Point> {
    anchor_of(dim, s).map(|d| d.anchor)
}

fn check_maximal(dim: Dimension, s: PointSet) -> Result<()> {
    if !is_cap(dim, s) {
        return Err(Error::NotACap);
    }
    let expected = known_max_cap_size(dim);
    if s.len() != expected {
        return Err(Error::NotMaximal {
            dim: dim.get(),
            size: s.len(),
            expected,
        });
    }
    Ok(())
}

/// Number of pairs of cap points on a line through the external point `p`.
pub fn completion_count(dim: Dimension, s: PointSet, p: Point) -> Result<usize> {
    if s.contains(p) {
        return Err(Error::Membership(p.raw()));
    }
    let space = dim.space();
    Ok(s.iter()
        .filter(|&q| {
            let r = space.third_unchecked(p, q);
            q < r && s.contains(r)
        })
        .count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CapRecord")]
pub struct Cap {
    dim: Dimension,
    points: PointSet,
}

#[derive(Deserialize)]
struct CapRecord {
    dim: Dimension,
    points: PointSet,
}

impl TryFrom<CapRecord> for Cap {
    type Error = Error;
    fn try_from(r: CapRecord) -> Result<Self> {
        Cap::new(r.dim, r.points)
    }
}

impl Cap {
    pub fn new(dim: Dimension, points: PointSet) -> Result<Self> {
        if !points.is_subset(dim.universe()) {
            let index = (points - dim.universe()).min().map_or(0, Point::index);
            return Err(Error::InvalidPoint {
                dim: dim.get(),
                index,
            });
        }
        if !is_cap(dim, points) {
            return Err(Error::NotACap);
        }
        Ok(Cap { dim, points })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn points(&self) -> PointSet {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        is_complete_cap(self.dim, self.points).expect("a cap")
    }

    pub fn sum(&self) -> Point {
        cap_sum(self.dim, self.points)
    }
}

/// A cap of the largest possible size for its dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct MaximalCap(Cap);

impl MaximalCap {
    pub fn new(dim: Dimension, points: PointSet) -> Result<Self> {
        let cap = Cap::new(dim, points)?;
        check_maximal(dim, points)?;
        Ok(MaximalCap(cap))
    }

    pub fn cap(&self) -> &Cap {
        &self.0
    }

    pub fn points(&self) -> PointSet {
        self.0.points
    }

    pub fn dim(&self) -> Dimension {
        self.0.dim
    }

    pub fn anchor(&self) -> Result<AnchorDecomposition> {
        anchor_of(self.0.dim, self.0.points)
    }
}

/// Maximal caps of AG(4,3) with anchor `0`, in lexicographic order.
///
/// Such a cap is a union of ten pairs `{p, -p}`, so the search chooses pairs
/// rather than points. The count is cross-checked against the orbit of the
/// canonical cap under GL(4,3) by the test suite.
pub fn anchor0_caps() -> &'static [PointSet] {
    static CAPS: OnceLock<Vec<PointSet>> = OnceLock::new();
    CAPS.get_or_init(|| {
        let within = Dimension::FOUR.universe().without(Point::ORIGIN);
        search::pair_closed_caps(Dimension::FOUR, within, 10, None)
    })
}

/// The lexicographically least maximal cap of AG(4,3) with anchor `0`.
pub fn canonical_cap() -> PointSet {
    static CAP: OnceLock<PointSet> = OnceLock::new();
    *CAP.get_or_init(|| {
        let within = Dimension::FOUR.universe().without(Point::ORIGIN);
        search::first_pair_closed_cap(Dimension::FOUR, within, 10).expect("a 20-cap exists")
    })
}

/// Maximal caps of AG(4,3) with anchor `a`: the translates of the anchor-0
/// caps, in lexicographic order.
pub fn caps_with_anchor(a: Point) -> Vec<PointSet> {
    let space = Dimension::FOUR.space();
    let mut caps: Vec<PointSet> = anchor0_caps()
        .iter()
        .map(|&c| space.translate(c, a))
        .collect();
    caps.sort_unstable_by(|x, y| x.lex_cmp(*y));
    caps
}

/// Every maximal cap of AG(n,3), in lexicographic order.
pub fn enumerate_maximal_caps(dim: Dimension) -> Vec<PointSet> {
    let size = known_max_cap_size(dim);
    let mut caps = Vec::new();
    if dim.n() <= 3 {
        let _ = search::for_each_cap(dim, size, PointSet::EMPTY, dim.universe(), |c| {
            caps.push(c);
            std::ops::ControlFlow::Continue(())
        });
    } else {
        for a in dim.space().points() {
            caps.extend(caps_with_anchor(a));
        }
        caps.sort_unstable_by(|x, y| x.lex_cmp(*y));
    }
    caps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_predicates() {
        let d4 = Dimension::FOUR;
        assert!(is_cap(d4, PointSet::EMPTY));
        let line = d4.space().lines()[17].to_set();
        assert!(!is_cap(d4, line));
        assert_eq!(is_complete_cap(d4, PointSet::EMPTY), Ok(false));
        assert!(is_complete_cap(d4, line).is_err());
        assert!(is_complete_cap(d4, canonical_cap()).unwrap());
        assert_eq!(cap_sum(d4, PointSet::EMPTY), Point::ORIGIN);
        let p = Point::new_unchecked(61);
        assert_eq!(cap_sum(d4, PointSet::singleton(p)), p);
    }

    #[test]
    fn canonical_cap_shape() {
        let s = canonical_cap();
        assert_eq!(s.len(), 20);
        let dec = anchor_of(Dimension::FOUR, s).unwrap();
        assert_eq!(dec.anchor, Point::ORIGIN);
        assert_eq!(dec.pairs.len(), 10);
        assert_eq!(
            completion_count(Dimension::FOUR, s, Point::ORIGIN).unwrap(),
            10
        );
    }

    #[test]
    fn canonical_cap_is_least_of_the_enumeration() {
        let caps = anchor0_caps();
        assert_eq!(caps[0], canonical_cap());
        assert!(caps.windows(2).all(|w| w[0].lex_cmp(w[1]).is_lt()));
    }

    #[test]
    fn anchor_errors() {
        let d3 = Dimension::THREE;
        let c = enumerate_maximal_caps(d3)[0];
        assert_eq!(anchor_of(d3, c), Err(Error::NoAnchor(3)));
        assert!(matches!(
            anchor_of(Dimension::FOUR, PointSet::from_indices([1, 2])),
            Err(Error::NotMaximal { .. })
        ));
        assert_eq!(
            anchor_of(Dimension::FOUR, Dimension::FOUR.universe()),
            Err(Error::NotACap)
        );
        assert_eq!(
            completion_count(Dimension::FOUR, canonical_cap(), canonical_cap().min().unwrap()),
            Err(Error::Membership(1))
        );
    }

    #[test]
    fn completions_cover_every_pair_once() {
        let d4 = Dimension::FOUR;
        let s = canonical_cap();
        let total: usize = (d4.universe() - s)
            .iter()
            .map(|p| completion_count(d4, s, p).unwrap())
            .sum();
        assert_eq!(total, 20 * 19 / 2);
    }

    #[test]
    fn translated_caps_have_translated_anchors() {
        let d4 = Dimension::FOUR;
        let space = d4.space();
        let s = canonical_cap();
        for a in space.points() {
            assert_eq!(anchor_point(d4, space.translate(s, a)).unwrap(), a);
        }
    }

    #[test]
    fn plane_caps() {
        let d2 = Dimension::TWO;
        let caps = enumerate_maximal_caps(d2);
        assert_eq!(caps.len(), 54);
        for c in caps {
            let dec = anchor_of(d2, c).unwrap();
            assert_eq!(dec.pairs.len(), 2);
            assert_eq!(completion_count(d2, c, dec.anchor).unwrap(), 2);
        }
    }

    #[test]
    fn cap_types_validate() {
        let d4 = Dimension::FOUR;
        assert!(Cap::new(d4, PointSet::from_indices([0, 40, 80])).is_err());
        assert!(Cap::new(Dimension::TWO, PointSet::from_indices([9])).is_err());
        let m = MaximalCap::new(d4, canonical_cap()).unwrap();
        assert_eq!(m.anchor().unwrap().anchor, Point::ORIGIN);
        assert!(MaximalCap::new(d4, PointSet::from_indices([0])).is_err());
        let json = serde_json::to_string(m.cap()).unwrap();
        let back: Cap = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, m.cap());
        assert!(serde_json::from_str::<Cap>(r#"{"dim":4,"points":[0,40,80]}"#).is_err());
    }
}
