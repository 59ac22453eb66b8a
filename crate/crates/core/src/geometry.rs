//! Arithmetic of AG(n,3): points, lines, hyperplane slices and grid layout.
//!
//! Points are indexed by their big-endian trit encoding, so the index of
//! `(x0, ..., x{n-1})` is `sum x_i * 3^(n-1-i)`. Every table a search needs
//! (addition, negation, third point of a line, dot products) is built once per
//! dimension and shared through [`Space::get`].

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::PointSet;

pub const MAX_DIM: u8 = 4;

const POW3: [usize; 5] = [1, 3, 9, 27, 81];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Dimension(u8);

impl Dimension {
    pub const ONE: Dimension = Dimension(1);
    pub const TWO: Dimension = Dimension(2);
    pub const THREE: Dimension = Dimension(3);
    pub const FOUR: Dimension = Dimension(4);

    pub fn new(n: u8) -> Result<Self> {
        if (1..=MAX_DIM).contains(&n) {
            Ok(Dimension(n))
        } else {
            Err(Error::UnsupportedDimension(n))
        }
    }

    #[inline]
    pub const fn get(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn n(self) -> usize {
        self.0 as usize
    }

    /// Number of points, 3^n.
    #[inline]
    pub const fn size(self) -> usize {
        POW3[self.0 as usize]
    }

    /// 3^(n-1) * (3^n - 1) / 2.
    pub const fn line_count(self) -> usize {
        POW3[self.0 as usize - 1] * (self.size() - 1) / 2
    }

    pub fn space(self) -> &'static Space {
        Space::get(self)
    }

    pub fn universe(self) -> PointSet {
        PointSet::full(self.size())
    }
}

impl TryFrom<u8> for Dimension {
    type Error = Error;
    fn try_from(n: u8) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for u8 {
    fn from(d: Dimension) -> u8 {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point of AG(n,3), identified by its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(u8);

impl Point {
    pub const ORIGIN: Point = Point(0);

    #[inline]
    pub const fn new_unchecked(index: u8) -> Self {
        Point(index)
    }

    pub fn new(dim: Dimension, index: usize) -> Result<Self> {
        if index < dim.size() {
            Ok(Point(index as u8))
        } else {
            Err(Error::InvalidPoint {
                dim: dim.get(),
                index,
            })
        }
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub const fn raw(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Three distinct collinear points, stored in ascending order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Line([Point; 3]);

impl Line {
    pub fn points(&self) -> [Point; 3] {
        self.0
    }

    pub fn to_set(&self) -> PointSet {
        PointSet::from_points(self.0)
    }
}

/// One parallel class of hyperplanes: the level sets of a nonzero functional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperplaneFamily {
    /// Coefficients of the functional, encoded as a point index.
    pub normal: Point,
    /// `slices[k]` holds the points on which the functional evaluates to `k`.
    pub slices: [PointSet; 3],
}

/// Precomputed tables for one dimension.
pub struct Space {
    dim: Dimension,
    size: usize,
    coords: Vec<[u8; 4]>,
    add: Vec<u8>,
    neg: Vec<u8>,
    third: Vec<u8>,
    dot: Vec<u8>,
    lines: Vec<Line>,
    lines_through: Vec<Vec<usize>>,
}

static SPACES: [OnceLock<Space>; 4] = [
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
];

impl Space {
    pub fn get(dim: Dimension) -> &'static Space {
        SPACES[dim.n() - 1].get_or_init(|| Space::build(dim))
    }

    fn build(dim: Dimension) -> Space {
        let n = dim.n();
        let size = dim.size();
        let coords: Vec<[u8; 4]> = (0..size)
            .map(|i| {
                let mut c = [0u8; 4];
                for (j, slot) in c.iter_mut().take(n).enumerate() {
                    *slot = ((i / POW3[n - 1 - j]) % 3) as u8;
                }
                c
            })
            .collect();
        let encode = |c: &[u8; 4]| -> u8 {
            (0..n).map(|j| c[j] as usize * POW3[n - 1 - j]).sum::<usize>() as u8
        };
        let mut add = vec![0u8; size * size];
        let mut third = vec![0u8; size * size];
        let mut dot = vec![0u8; size * size];
        for p in 0..size {
            for q in 0..size {
                let mut s = [0u8; 4];
                let mut t = [0u8; 4];
                let mut d = 0u8;
                for j in 0..n {
                    let (a, b) = (coords[p][j], coords[q][j]);
                    s[j] = (a + b) % 3;
                    t[j] = (6 - a - b) % 3;
                    d = (d + a * b) % 3;
                }
                add[p * size + q] = encode(&s);
                third[p * size + q] = encode(&t);
                dot[p * size + q] = d;
            }
        }
        let neg = (0..size)
            .map(|p| {
                let mut c = coords[p];
                for x in c.iter_mut().take(n) {
                    *x = (3 - *x) % 3;
                }
                encode(&c)
            })
            .collect();

        let mut lines = Vec::with_capacity(dim.line_count());
        for p in 0..size {
            for q in p + 1..size {
                let r = third[p * size + q] as usize;
                if r > q {
                    lines.push(Line([p, q, r].map(|i| Point(i as u8))));
                }
            }
        }
        let mut lines_through = vec![Vec::new(); size];
        for (k, line) in lines.iter().enumerate() {
            for p in line.0 {
                lines_through[p.index()].push(k);
            }
        }
        Space {
            dim,
            size,
            coords,
            add,
            neg,
            third,
            dot,
            lines,
            lines_through,
        }
    }

    #[inline]
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn universe(&self) -> PointSet {
        PointSet::full(self.size)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> {
        (0..self.size as u8).map(Point)
    }

    pub fn point(&self, index: usize) -> Result<Point> {
        Point::new(self.dim, index)
    }

    pub fn point_from_coords(&self, coords: &[u8]) -> Result<Point> {
        let n = self.dim.n();
        if coords.len() != n || coords.iter().any(|&c| c > 2) {
            return Err(Error::InvalidCoordinate {
                dim: self.dim.get(),
                coords: coords.to_vec(),
            });
        }
        let index: usize = coords
            .iter()
            .enumerate()
            .map(|(j, &c)| c as usize * POW3[n - 1 - j])
            .sum();
        Ok(Point(index as u8))
    }

    #[inline]
    pub fn coords(&self, p: Point) -> &[u8] {
        &self.coords[p.index()][..self.dim.n()]
    }

    #[inline]
    pub fn add(&self, p: Point, q: Point) -> Point {
        Point(self.add[p.index() * self.size + q.index()])
    }

    #[inline]
    pub fn neg(&self, p: Point) -> Point {
        Point(self.neg[p.index()])
    }

    #[inline]
    pub fn sub(&self, p: Point, q: Point) -> Point {
        self.add(p, self.neg(q))
    }

    #[inline]
    pub fn scale(&self, k: u8, p: Point) -> Point {
        match k % 3 {
            0 => Point::ORIGIN,
            1 => p,
            _ => self.neg(p),
        }
    }

    /// Dot product of two coordinate vectors, mod 3.
    #[inline]
    pub fn dot(&self, p: Point, q: Point) -> u8 {
        self.dot[p.index() * self.size + q.index()]
    }

    /// The third point on the line through `p` and `q`, without the `p != q`
    /// check. For `p == q` this returns `p`.
    #[inline]
    pub fn third_unchecked(&self, p: Point, q: Point) -> Point {
        Point(self.third[p.index() * self.size + q.index()])
    }

    pub fn third_point(&self, p: Point, q: Point) -> Result<Point> {
        if p == q {
            return Err(Error::DegeneratePair(p.raw()));
        }
        Ok(self.third_unchecked(p, q))
    }

    pub fn is_line(&self, p: Point, q: Point, r: Point) -> bool {
        p != q && q != r && p != r && self.third_unchecked(p, q) == r
    }

    /// All lines, each once, ordered lexicographically by sorted triple.
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// Indices into [`Space::lines`] of the lines through `p`.
    pub fn lines_through(&self, p: Point) -> &[usize] {
        &self.lines_through[p.index()]
    }

    /// Translate every point of `s` by `v`.
    pub fn translate(&self, s: PointSet, v: Point) -> PointSet {
        if v == Point::ORIGIN {
            return s;
        }
        s.iter().map(|p| self.add(p, v)).collect()
    }

    /// Coordinate-wise sum of the points of `s`, mod 3.
    pub fn sum(&self, s: PointSet) -> Point {
        s.iter().fold(Point::ORIGIN, |acc, p| self.add(acc, p))
    }

    /// Number of lines contained in `s`.
    pub fn lines_within(&self, s: PointSet) -> usize {
        let mut count = 0;
        for p in s {
            for q in s {
                if q <= p {
                    continue;
                }
                let r = self.third_unchecked(p, q);
                if r > q && s.contains(r) {
                    count += 1;
                }
            }
        }
        count
    }

    /// The hyperplane family with the given functional. `normal` must be
    /// nonzero.
    pub fn hyperplane_family(&self, normal: Point) -> Result<HyperplaneFamily> {
        if normal == Point::ORIGIN {
            return Err(Error::Precondition(
                "hyperplane normal must be nonzero".into(),
            ));
        }
        let mut slices = [PointSet::EMPTY; 3];
        for p in self.points() {
            slices[self.dot(normal, p) as usize].insert(p);
        }
        Ok(HyperplaneFamily { normal, slices })
    }

    /// The n families whose normals are coordinate vectors.
    pub fn coordinate_hyperplane_families(&self) -> Vec<HyperplaneFamily> {
        let n = self.dim.n();
        (0..n)
            .map(|i| {
                self.hyperplane_family(Point(POW3[n - 1 - i] as u8))
                    .expect("coordinate normal is nonzero")
            })
            .collect()
    }

    /// All (3^n - 1) / 2 parallel classes of hyperplanes, one per normal
    /// whose first nonzero coordinate is 1.
    pub fn hyperplane_families(&self) -> Vec<HyperplaneFamily> {
        self.points()
            .filter(|&p| self.coords(p).iter().find(|&&c| c != 0) == Some(&1))
            .map(|p| self.hyperplane_family(p).expect("nonzero normal"))
            .collect()
    }

    /// Grid cell of `p`. For n = 4 the first two coordinates pick the 3x3
    /// subgrid and the last two the cell inside it; n = 3 lays three 3x3
    /// grids side by side; n = 2 is a single 3x3 grid; n = 1 is one row.
    pub fn grid_position(&self, p: Point) -> (usize, usize) {
        let c = self.coords(p);
        match self.dim.get() {
            1 => (0, c[0] as usize),
            2 => (c[0] as usize, c[1] as usize),
            3 => (c[1] as usize, 3 * c[0] as usize + c[2] as usize),
            _ => (
                3 * c[0] as usize + c[2] as usize,
                3 * c[1] as usize + c[3] as usize,
            ),
        }
    }

    /// Rows and columns of the grid used by [`Space::grid_position`].
    pub fn grid_shape(&self) -> (usize, usize) {
        match self.dim.get() {
            1 => (1, 3),
            2 => (3, 3),
            3 => (3, 9),
            _ => (9, 9),
        }
    }
}

/// Sorted descending sizes of `s` intersected with each slice of `family`.
pub fn hyperplane_profile(s: PointSet, family: &HyperplaneFamily) -> [usize; 3] {
    let mut sizes = family.slices.map(|h| (s & h).len());
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: u8) -> &'static Space {
        Dimension::new(n).unwrap().space()
    }

    #[test]
    fn coordinate_encoding() {
        let s4 = space(4);
        assert_eq!(s4.point_from_coords(&[0, 0, 0, 0]).unwrap().index(), 0);
        assert_eq!(s4.point_from_coords(&[1, 1, 1, 1]).unwrap().index(), 40);
        assert_eq!(space(2).point_from_coords(&[2, 1]).unwrap().index(), 7);
        assert!(matches!(
            s4.point_from_coords(&[0, 3, 0, 0]),
            Err(Error::InvalidCoordinate { .. })
        ));
        assert!(s4.point_from_coords(&[0, 0, 0]).is_err());
        for p in s4.points() {
            assert_eq!(s4.point_from_coords(s4.coords(p)).unwrap(), p);
        }
        assert!(Dimension::new(0).is_err());
        assert!(Dimension::new(5).is_err());
    }

    #[test]
    fn third_point_examples() {
        let s4 = space(4);
        let p = |c: &[u8]| s4.point_from_coords(c).unwrap();
        assert_eq!(
            s4.third_point(Point(0), Point(40)).unwrap(),
            p(&[2, 2, 2, 2])
        );
        assert_eq!(s4.third_point(Point(0), Point(40)).unwrap().index(), 80);
        assert_eq!(
            s4.third_point(p(&[1, 0, 2, 1]), p(&[1, 1, 0, 2])).unwrap(),
            p(&[1, 2, 1, 0])
        );
        let s2 = space(2);
        let q = |c: &[u8]| s2.point_from_coords(c).unwrap();
        assert_eq!(s2.third_point(q(&[0, 1]), q(&[0, 2])).unwrap(), q(&[0, 0]));
        assert_eq!(
            s4.third_point(Point(5), Point(5)),
            Err(Error::DegeneratePair(5))
        );
    }

    #[test]
    fn is_line_examples() {
        let s4 = space(4);
        assert!(s4.is_line(Point(0), Point(40), Point(80)));
        assert!(!s4.is_line(Point(0), Point(0), Point(0)));
    }

    #[test]
    fn third_point_is_the_only_completion() {
        for n in 1..=3 {
            let s = space(n);
            for p in s.points() {
                for q in s.points().filter(|&q| q != p) {
                    let r = s.third_point(p, q).unwrap();
                    assert!(r != p && r != q);
                    assert_eq!(s.third_point(q, p).unwrap(), r);
                    assert_eq!(s.third_point(p, r).unwrap(), q);
                    let completions: Vec<_> =
                        s.points().filter(|&x| s.is_line(p, q, x)).collect();
                    assert_eq!(completions, vec![r]);
                }
            }
        }
    }

    #[test]
    fn line_counts_match_brute_force() {
        for n in 1..=4 {
            let s = space(n);
            let mut brute = Vec::new();
            for p in s.points() {
                for q in s.points().filter(|&q| q > p) {
                    for r in s.points().filter(|&r| r > q) {
                        let sum = s.add(s.add(p, q), r);
                        if sum == Point::ORIGIN {
                            brute.push(Line([p, q, r]));
                        }
                    }
                }
            }
            assert_eq!(s.lines(), &brute[..], "n = {n}");
            assert_eq!(brute.len(), s.dim().line_count());
        }
        assert_eq!(space(1).lines().len(), 1);
        assert_eq!(space(2).lines().len(), 12);
        assert_eq!(space(4).lines().len(), 1080);
        assert_eq!(27 * 80 / 2, 1080);
    }

    #[test]
    fn lines_per_point() {
        for n in 1..=4 {
            let s = space(n);
            for p in s.points() {
                assert_eq!(s.lines_through(p).len(), (s.size() - 1) / 2);
            }
        }
        assert_eq!(space(4).lines_through(Point(17)).len(), 40);
    }

    #[test]
    fn hyperplane_families_partition_the_space() {
        for n in 1..=4 {
            let s = space(n);
            let families = s.hyperplane_families();
            assert_eq!(families.len(), (s.size() - 1) / 2);
            for f in &families {
                let [a, b, c] = f.slices;
                assert!(a.is_disjoint(b) && b.is_disjoint(c) && a.is_disjoint(c));
                assert_eq!(a | b | c, s.universe());
                for slice in f.slices {
                    assert_eq!(slice.len(), s.size() / 3);
                }
                assert_eq!(hyperplane_profile(s.universe(), f), [s.size() / 3; 3]);
                assert_eq!(hyperplane_profile(PointSet::EMPTY, f), [0; 3]);
            }
        }
        assert_eq!(space(3).hyperplane_families().len(), 13);
        assert_eq!(space(4).coordinate_hyperplane_families().len(), 4);
        assert!(space(4).hyperplane_family(Point::ORIGIN).is_err());
    }

    #[test]
    fn grid_layout() {
        let s4 = space(4);
        let p = |c: &[u8]| s4.point_from_coords(c).unwrap();
        assert_eq!(s4.grid_position(p(&[0, 0, 0, 0])), (0, 0));
        assert_eq!(s4.grid_position(p(&[1, 2, 0, 1])), (3, 7));
        assert_eq!(s4.grid_position(p(&[2, 2, 2, 2])), (8, 8));
        for n in 1..=4 {
            let s = space(n);
            let (rows, cols) = s.grid_shape();
            let mut seen = vec![false; rows * cols];
            for q in s.points() {
                let (r, c) = s.grid_position(q);
                assert!(r < rows && c < cols);
                assert!(!seen[r * cols + c]);
                seen[r * cols + c] = true;
            }
            assert!(seen.iter().all(|&b| b));
        }
    }
}
