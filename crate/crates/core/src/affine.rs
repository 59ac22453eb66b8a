//! GL(n,3) and Aff(n,3): maps, their action on point sets, enumeration of the
//! full linear group, stabilizers, transporters and orbits.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{Dimension, Point, Space};
use crate::pointset::PointSet;

/// Largest explicit element list a stabilizer computation will materialize.
pub const MAX_MATERIALIZED: u64 = 1 << 20;

type Matrix = [[u8; 4]; 4];

const INV3: [u8; 3] = [0, 1, 2];

fn mat_mul(n: usize, a: &Matrix, b: &Matrix) -> Matrix {
    let mut c = [[0u8; 4]; 4];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0u8;
            for k in 0..n {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s % 3;
        }
    }
    c
}

/// Determinant mod 3 by Gaussian elimination.
fn mat_det(n: usize, m: &Matrix) -> u8 {
    let mut a = *m;
    let mut det = 1u8;
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| a[r][col] != 0) else {
            return 0;
        };
        if pivot != col {
            a.swap(pivot, col);
            det = (det * 2) % 3;
        }
        det = (det * a[col][col]) % 3;
        let inv = INV3[a[col][col] as usize];
        for r in col + 1..n {
            let f = (a[r][col] * inv) % 3;
            if f != 0 {
                for c in col..n {
                    a[r][c] = (a[r][c] + 3 * 3 - f * a[col][c]) % 3;
                }
            }
        }
    }
    det
}

fn mat_inverse(n: usize, m: &Matrix) -> Option<Matrix> {
    let mut a = *m;
    let mut inv = [[0u8; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = 1;
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let p = INV3[a[col][col] as usize];
        for c in 0..n {
            a[col][c] = (a[col][c] * p) % 3;
            inv[col][c] = (inv[col][c] * p) % 3;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..n {
                    a[r][c] = (a[r][c] + 9 - f * a[col][c]) % 3;
                    inv[r][c] = (inv[r][c] + 9 - f * inv[col][c]) % 3;
                }
            }
        }
    }
    Some(inv)
}

/// Image of `p` under the matrix whose rows are the point indices `rows`.
#[inline]
fn apply_rows(space: &Space, rows: &[u8; 4], p: Point) -> Point {
    let mut index = 0u8;
    for &row in rows.iter().take(space.dim().n()) {
        index = index * 3 + space.dot(Point::new_unchecked(row), p);
    }
    Point::new_unchecked(index)
}

/// An invertible n x n matrix over GF(3). Rows are stored as point indices,
/// so an n = 4 matrix is four bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearMap {
    dim: Dimension,
    rows: [u8; 4],
    det: u8,
}

impl LinearMap {
    pub fn identity(dim: Dimension) -> Self {
        let n = dim.n();
        let mut rows = [0u8; 4];
        for (i, r) in rows.iter_mut().enumerate().take(n) {
            *r = 3u8.pow((n - 1 - i) as u32);
        }
        LinearMap { dim, rows, det: 1 }
    }

    pub fn from_rows(dim: Dimension, rows: &[Point]) -> Result<Self> {
        if rows.len() != dim.n() || rows.iter().any(|r| r.index() >= dim.size()) {
            return Err(Error::Precondition(format!(
                "expected {} rows of dimension {dim}",
                dim.n()
            )));
        }
        let mut packed = [0u8; 4];
        for (slot, r) in packed.iter_mut().zip(rows) {
            *slot = r.raw();
        }
        Self::from_packed(dim, packed)
    }

    fn from_packed(dim: Dimension, rows: [u8; 4]) -> Result<Self> {
        let det = mat_det(dim.n(), &Self::entries_of(dim, &rows));
        if det == 0 {
            return Err(Error::Precondition("matrix is singular".into()));
        }
        Ok(LinearMap { dim, rows, det })
    }

    pub fn from_matrix(dim: Dimension, entries: &[Vec<u8>]) -> Result<Self> {
        let space = dim.space();
        let rows: Vec<Point> = entries
            .iter()
            .map(|r| space.point_from_coords(r))
            .collect::<Result<_>>()?;
        Self::from_rows(dim, &rows)
    }

    fn from_entries(dim: Dimension, m: &Matrix) -> Result<Self> {
        let space = dim.space();
        let n = dim.n();
        let mut rows = [0u8; 4];
        for i in 0..n {
            rows[i] = space.point_from_coords(&m[i][..n])?.raw();
        }
        Self::from_packed(dim, rows)
    }

    fn entries_of(dim: Dimension, rows: &[u8; 4]) -> Matrix {
        let space = dim.space();
        let mut m = [[0u8; 4]; 4];
        for i in 0..dim.n() {
            let c = space.coords(Point::new_unchecked(rows[i]));
            m[i][..c.len()].copy_from_slice(c);
        }
        m
    }

    fn entries(&self) -> Matrix {
        Self::entries_of(self.dim, &self.rows)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn determinant(&self) -> u8 {
        self.det
    }

    pub fn rows(&self) -> impl Iterator<Item = Point> + '_ {
        self.rows[..self.dim.n()].iter().map(|&r| Point::new_unchecked(r))
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        apply_rows(self.dim.space(), &self.rows, p)
    }

    pub fn apply_set(&self, s: PointSet) -> PointSet {
        let space = self.dim.space();
        s.iter().map(|p| apply_rows(space, &self.rows, p)).collect()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        let n = self.dim.n();
        let m = mat_mul(n, &self.entries(), &other.entries());
        let mut out = Self::from_entries(self.dim, &m).expect("product of invertibles");
        out.det = (self.det * other.det) % 3;
        out
    }

    pub fn inverse(&self) -> LinearMap {
        let inv = mat_inverse(self.dim.n(), &self.entries()).expect("invertible");
        Self::from_entries(self.dim, &inv).expect("inverse is invertible")
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    /// Row-major trit string, n^2 characters.
    pub fn to_trit_string(&self) -> String {
        let space = self.dim.space();
        self.rows()
            .flat_map(|r| space.coords(r).to_vec())
            .map(|t| char::from(b'0' + t))
            .collect()
    }

    pub fn parse_trit_string(dim: Dimension, s: &str) -> Result<Self> {
        let n = dim.n();
        let trits = parse_trits(s, n * n)?;
        let rows: Vec<Vec<u8>> = trits.chunks(n).map(<[u8]>::to_vec).collect();
        Self::from_matrix(dim, &rows)
    }
}

fn parse_trits(s: &str, expected: usize) -> Result<Vec<u8>> {
    let err = |message: String| Error::Parse {
        line: 1,
        column: 1,
        message,
    };
    if s.len() != expected {
        return Err(err(format!(
            "expected {expected} trits, found {} characters in {s:?}",
            s.len()
        )));
    }
    s.bytes()
        .enumerate()
        .map(|(i, b)| match b {
            b'0'..=b'2' => Ok(b - b'0'),
            _ => Err(Error::Parse {
                line: 1,
                column: i + 1,
                message: format!("invalid trit {:?}", b as char),
            }),
        })
        .collect()
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearMap({})", self.to_trit_string())
    }
}

/// `v ↦ A v + b`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineMap {
    pub linear: LinearMap,
    pub translation: Point,
}

/// Canonical key of an affine map: the images of `0, e_1, ..., e_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MapKey(u64);

impl MapKey {
    /// Key of the map sending the points of [`frame_indices`] to `images`.
    pub fn from_images(images: &[u8]) -> Self {
        MapKey(images.iter().fold(0u64, |acc, &b| acc << 8 | b as u64))
    }
}

/// Indices of `0, e_1, ..., e_n`: an affine map is determined by their images.
pub fn frame_indices(dim: Dimension) -> Vec<usize> {
    frame(dim).iter().map(|p| p.index()).collect()
}

/// Points `0, e_1, ..., e_n` (e_1 has its 1 in the first coordinate).
fn frame(dim: Dimension) -> Vec<Point> {
    let n = dim.n();
    std::iter::once(Point::ORIGIN)
        .chain((0..n).map(|i| Point::new_unchecked(3u8.pow((n - 1 - i) as u32))))
        .collect()
}

impl AffineMap {
    pub fn identity(dim: Dimension) -> Self {
        LinearMap::identity(dim).into()
    }

    pub fn new(linear: LinearMap, translation: Point) -> Self {
        AffineMap {
            linear,
            translation,
        }
    }

    pub fn translation(dim: Dimension, v: Point) -> Self {
        AffineMap::new(LinearMap::identity(dim), v)
    }

    pub fn dim(&self) -> Dimension {
        self.linear.dim
    }

    pub fn is_linear(&self) -> bool {
        self.translation == Point::ORIGIN
    }

    pub fn determinant(&self) -> u8 {
        self.linear.det
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let space = self.linear.dim.space();
        space.add(apply_rows(space, &self.linear.rows, p), self.translation)
    }

    pub fn apply_set(&self, s: PointSet) -> PointSet {
        let space = self.linear.dim.space();
        s.iter()
            .map(|p| space.add(apply_rows(space, &self.linear.rows, p), self.translation))
            .collect()
    }

    /// Point permutation induced by the map.
    pub fn permutation(&self) -> Vec<u8> {
        self.dim()
            .space()
            .points()
            .map(|p| self.apply(p).raw())
            .collect()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: self.linear.compose(&other.linear),
            translation: self.apply(other.translation),
        }
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self.linear.inverse();
        let space = self.dim().space();
        AffineMap {
            linear: inv,
            translation: space.neg(inv.apply(self.translation)),
        }
    }

    pub fn key(&self) -> MapKey {
        let images: Vec<u8> = frame(self.dim())
            .into_iter()
            .map(|p| self.apply(p).raw())
            .collect();
        MapKey::from_images(&images)
    }

    /// Row-major matrix trits followed by the n translation trits.
    pub fn to_trit_string(&self) -> String {
        let space = self.dim().space();
        let mut s = self.linear.to_trit_string();
        s.extend(
            space
                .coords(self.translation)
                .iter()
                .map(|&t| char::from(b'0' + t)),
        );
        s
    }

    /// Accepts either n^2 trits (a linear map) or n^2 + n trits.
    pub fn parse_trit_string(dim: Dimension, s: &str) -> Result<Self> {
        let n = dim.n();
        if s.len() == n * n {
            return Ok(LinearMap::parse_trit_string(dim, s)?.into());
        }
        let trits = parse_trits(s, n * n + n)?;
        let linear = LinearMap::parse_trit_string(dim, &s[..n * n])?;
        let translation = dim.space().point_from_coords(&trits[n * n..])?;
        Ok(AffineMap::new(linear, translation))
    }

    /// Smallest k >= 1 with self^k = identity.
    pub fn order(&self) -> usize {
        let id = AffineMap::identity(self.dim());
        let mut g = *self;
        let mut k = 1;
        while g != id {
            g = g.compose(self);
            k += 1;
        }
        k
    }
}

impl From<LinearMap> for AffineMap {
    fn from(linear: LinearMap) -> Self {
        AffineMap {
            linear,
            translation: Point::ORIGIN,
        }
    }
}

impl fmt::Debug for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AffineMap({})", self.to_trit_string())
    }
}

impl Serialize for AffineMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_linear() {
            serializer.serialize_str(&self.linear.to_trit_string())
        } else {
            serializer.serialize_str(&self.to_trit_string())
        }
    }
}

impl Serialize for LinearMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_trit_string())
    }
}

/// Deserializes a bare trit string for a dimension inferred from its length.
impl<'de> Deserialize<'de> for AffineMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let dim = match s.len() {
            1 | 2 => 1,
            4 | 6 => 2,
            9 | 12 => 3,
            16 | 20 => 4,
            len => {
                return Err(serde::de::Error::custom(format!(
                    "no dimension has maps of {len} trits"
                )))
            }
        };
        let dim = Dimension::new(dim).map_err(serde::de::Error::custom)?;
        AffineMap::parse_trit_string(dim, &s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    /// GL(n,3), the maps fixing the origin.
    Linear,
    /// Aff(n,3).
    Affine,
}

/// |GL(n,3)| = prod (3^n - 3^i), times 3^n for Aff(n,3).
pub fn group_order(dim: Dimension, ambient: Ambient) -> u64 {
    let q = dim.size() as u64;
    let gl: u64 = (0..dim.n() as u32).map(|i| q - 3u64.pow(i)).product();
    match ambient {
        Ambient::Linear => gl,
        Ambient::Affine => gl * q,
    }
}

/// The subspace spanned by the current set `span` and `v`.
fn extend_span(space: &Space, span: PointSet, v: Point) -> PointSet {
    let mut out = span;
    let w = space.neg(v);
    for p in span {
        out.insert(space.add(p, v));
        out.insert(space.add(p, w));
    }
    out
}

fn for_each_gl_row<F>(space: &Space, rows: &mut [u8; 4], depth: usize, span: PointSet, f: &mut F)
where
    F: FnMut(&[u8; 4]),
{
    let n = space.dim().n();
    if depth == n {
        f(rows);
        return;
    }
    for r in space.points() {
        if span.contains(r) {
            continue;
        }
        rows[depth] = r.raw();
        let next = if depth + 1 < n {
            extend_span(space, span, r)
        } else {
            span
        };
        for_each_gl_row(space, rows, depth + 1, next, f);
    }
}

/// Calls `f` on the packed rows of every invertible matrix whose first row is
/// `first`, in lexicographic row-major order.
fn for_each_gl_in_shard<F: FnMut(&[u8; 4])>(dim: Dimension, first: Point, mut f: F) {
    let space = dim.space();
    let mut rows = [0u8; 4];
    rows[0] = first.raw();
    let span = extend_span(space, PointSet::singleton(Point::ORIGIN), first);
    for_each_gl_row(space, &mut rows, 1, span, &mut f);
}

fn gl_shards(dim: Dimension) -> Vec<Point> {
    dim.space().points().skip(1).collect()
}

fn linear_from_packed(dim: Dimension, rows: &[u8; 4]) -> LinearMap {
    LinearMap::from_packed(dim, *rows).expect("enumerated matrices are invertible")
}

/// Every element of GL(n,3) exactly once, lexicographic by row-major
/// entries. Produced one first-row shard at a time.
pub fn enumerate_gl(dim: Dimension) -> impl Iterator<Item = LinearMap> {
    gl_shards(dim).into_iter().flat_map(move |first| {
        let mut shard = Vec::new();
        for_each_gl_in_shard(dim, first, |rows| shard.push(linear_from_packed(dim, rows)));
        shard
    })
}

/// Counts the elements of GL(n,3) satisfying `pred`, sharded by first row.
pub fn count_gl<P>(dim: Dimension, pred: P) -> u64
where
    P: Fn(&LinearView<'_>) -> bool + Sync,
{
    gl_shards(dim)
        .into_par_iter()
        .map(|first| {
            let space = dim.space();
            let mut count = 0u64;
            for_each_gl_in_shard(dim, first, |rows| {
                if pred(&LinearView { space, rows }) {
                    count += 1;
                }
            });
            count
        })
        .sum()
}

/// Elements of GL(n,3) satisfying `pred`, in enumeration order.
pub fn filter_gl<P>(dim: Dimension, pred: P) -> Vec<LinearMap>
where
    P: Fn(&LinearView<'_>) -> bool + Sync,
{
    let shards: Vec<Vec<LinearMap>> = gl_shards(dim)
        .into_par_iter()
        .map(|first| {
            let space = dim.space();
            let mut hits = Vec::new();
            for_each_gl_in_shard(dim, first, |rows| {
                if pred(&LinearView { space, rows }) {
                    hits.push(linear_from_packed(dim, rows));
                }
            });
            hits
        })
        .collect();
    shards.into_iter().flatten().collect()
}

/// A borrowed, unvalidated matrix used inside GL sweeps.
pub struct LinearView<'a> {
    space: &'a Space,
    rows: &'a [u8; 4],
}

impl LinearView<'_> {
    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        apply_rows(self.space, self.rows, p)
    }

    /// Whether the map sends every point of `s` into `t`.
    #[inline]
    pub fn maps_into(&self, s: PointSet, t: PointSet) -> bool {
        s.iter().all(|p| t.contains(self.apply(p)))
    }
}

/// Generators of GL(n,3): the elementary transvections plus diag(2,1,...,1).
pub fn gl_generators(dim: Dimension) -> Vec<LinearMap> {
    let n = dim.n();
    let mut gens = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut m = identity_entries(n);
                m[i][j] = 1;
                gens.push(LinearMap::from_entries(dim, &m).expect("transvection"));
            }
        }
    }
    let mut d = identity_entries(n);
    d[0][0] = 2;
    gens.push(LinearMap::from_entries(dim, &d).expect("diagonal"));
    gens
}

/// Generators of Aff(n,3): [`gl_generators`] plus the unit translations.
pub fn aff_generators(dim: Dimension) -> Vec<AffineMap> {
    let mut gens: Vec<AffineMap> = gl_generators(dim).into_iter().map(Into::into).collect();
    gens.extend(
        frame(dim)
            .into_iter()
            .skip(1)
            .map(|e| AffineMap::translation(dim, e)),
    );
    gens
}

fn identity_entries(n: usize) -> Matrix {
    let mut m = [[0u8; 4]; 4];
    for (i, row) in m.iter_mut().enumerate().take(n) {
        row[i] = 1;
    }
    m
}

/// Linear span of `points` (always contains the origin).
pub fn linear_span(space: &Space, points: impl IntoIterator<Item = Point>) -> PointSet {
    points
        .into_iter()
        .fold(PointSet::singleton(Point::ORIGIN), |span, p| {
            if span.contains(p) {
                span
            } else {
                extend_span(space, span, p)
            }
        })
}

/// A greedy basis of the span of `s`, taking points in ascending order.
pub fn greedy_basis(space: &Space, s: PointSet) -> Vec<Point> {
    let mut span = PointSet::singleton(Point::ORIGIN);
    let mut basis = Vec::new();
    for p in s {
        if !span.contains(p) {
            span = extend_span(space, span, p);
            basis.push(p);
        }
    }
    basis
}

/// Search state for the basis-image method: a basis of `span(source)` and,
/// for every source point, its coordinates in that basis grouped by the
/// number of basis vectors needed to express it.
struct BasisFrame {
    basis: Vec<Point>,
    layers: Vec<Vec<(Point, Vec<u8>)>>,
}

impl BasisFrame {
    fn new(space: &Space, source: PointSet) -> Self {
        let basis = greedy_basis(space, source - PointSet::singleton(Point::ORIGIN));
        let mut layers = vec![Vec::new(); basis.len()];
        for (k, layer) in layers.iter_mut().enumerate() {
            // All combinations sum c_i b_i with c_k != 0.
            let combos = 3usize.pow(k as u32) * 2;
            for code in 0..combos {
                let mut coeffs = vec![0u8; k + 1];
                let mut c = code;
                for slot in coeffs.iter_mut().take(k) {
                    *slot = (c % 3) as u8;
                    c /= 3;
                }
                coeffs[k] = (c % 2) as u8 + 1;
                let p = combine(space, &basis, &coeffs);
                if source.contains(p) {
                    layer.push((p, coeffs));
                }
            }
        }
        BasisFrame { basis, layers }
    }
}

fn combine(space: &Space, vectors: &[Point], coeffs: &[u8]) -> Point {
    vectors
        .iter()
        .zip(coeffs)
        .fold(Point::ORIGIN, |acc, (&v, &c)| space.add(acc, space.scale(c, v)))
}

/// Matrix with `M b_i = img_i` for a basis `b` of the whole space.
fn map_from_images(dim: Dimension, basis: &[Point], images: &[Point]) -> LinearMap {
    let space = dim.space();
    let n = dim.n();
    let mut b = [[0u8; 4]; 4];
    let mut im = [[0u8; 4]; 4];
    for j in 0..n {
        for i in 0..n {
            b[i][j] = space.coords(basis[j])[i];
            im[i][j] = space.coords(images[j])[i];
        }
    }
    let binv = mat_inverse(n, &b).expect("basis is independent");
    LinearMap::from_entries(dim, &mat_mul(n, &im, &binv)).expect("images are independent")
}

/// Per-level branching counts recorded during a basis-image search.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BasisBranching {
    /// The source basis, in the order its images were chosen.
    pub basis: Vec<Point>,
    /// `distinct[k]`: for every successful search, the number of distinct
    /// choices at level k given the choices above it, collected as a set.
    pub choices_per_level: Vec<Vec<usize>>,
}

/// All linear maps sending `source` onto `target`, found by choosing images
/// for a basis of `span(source)` among the points of `target` and pruning as
/// soon as a source point already determined by the chosen images leaves
/// `target`. Stops early when `visit` breaks.
fn linear_transporter_search<F>(
    dim: Dimension,
    source: PointSet,
    target: PointSet,
    limit: u64,
    mut visit: F,
) -> Result<Option<BasisBranching>>
where
    F: FnMut(LinearMap) -> ControlFlow<()>,
{
    let space = dim.space();
    if source.len() != target.len() || source.contains(Point::ORIGIN) != target.contains(Point::ORIGIN) {
        return Ok(None);
    }
    let frame = BasisFrame::new(space, source);
    let rank = frame.basis.len();
    if greedy_basis(space, target - PointSet::singleton(Point::ORIGIN)).len() != rank {
        return Ok(None);
    }
    let targets: Vec<Point> = (target - PointSet::singleton(Point::ORIGIN)).iter().collect();

    // Partial solutions on span(source).
    let mut solutions: Vec<Vec<Point>> = Vec::new();
    let mut images = Vec::with_capacity(rank);
    fn dfs(
        space: &Space,
        frame: &BasisFrame,
        targets: &[Point],
        target: PointSet,
        images: &mut Vec<Point>,
        span: PointSet,
        out: &mut Vec<Vec<Point>>,
    ) {
        let k = images.len();
        if k == frame.basis.len() {
            out.push(images.clone());
            return;
        }
        for &cand in targets {
            if span.contains(cand) {
                continue;
            }
            images.push(cand);
            let ok = frame.layers[k]
                .iter()
                .all(|(_, coeffs)| target.contains(combine(space, images, coeffs)));
            if ok {
                let next = extend_span(space, span, cand);
                dfs(space, frame, targets, target, images, next, out);
            }
            images.pop();
        }
    }
    dfs(
        space,
        &frame,
        &targets,
        target,
        &mut images,
        PointSet::singleton(Point::ORIGIN),
        &mut solutions,
    );

    let q = dim.size() as u64;
    let extensions: u64 = (rank as u32..dim.n() as u32).map(|i| q - 3u64.pow(i)).product();
    let total = solutions.len() as u64 * extensions;
    if total > limit {
        return Err(Error::Capacity {
            what: "transporter set",
            needed: total,
            limit,
        });
    }

    // Complete the source basis with unit vectors outside its span.
    let mut full_basis = frame.basis.clone();
    let mut span = linear_span(space, full_basis.iter().copied());
    for e in frame_units(dim) {
        if !span.contains(e) {
            span = extend_span(space, span, e);
            full_basis.push(e);
        }
    }

    let branching = branching_summary(&frame.basis, &solutions);
    for sol in &solutions {
        let span = linear_span(space, sol.iter().copied());
        let mut imgs = sol.clone();
        if extend_images(dim, &full_basis, &mut imgs, span, &mut visit).is_break() {
            break;
        }
    }
    Ok(Some(branching))
}

fn frame_units(dim: Dimension) -> Vec<Point> {
    frame(dim).into_iter().skip(1).collect()
}

fn extend_images<F>(
    dim: Dimension,
    basis: &[Point],
    images: &mut Vec<Point>,
    span: PointSet,
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(LinearMap) -> ControlFlow<()>,
{
    if images.len() == basis.len() {
        return visit(map_from_images(dim, basis, images));
    }
    let space = dim.space();
    for p in space.points() {
        if span.contains(p) {
            continue;
        }
        images.push(p);
        let next = extend_span(space, span, p);
        let flow = extend_images(dim, basis, images, next, visit);
        images.pop();
        flow?;
    }
    ControlFlow::Continue(())
}

fn branching_summary(basis: &[Point], solutions: &[Vec<Point>]) -> BasisBranching {
    let mut levels = Vec::new();
    for k in 0..basis.len() {
        let mut children: HashMap<&[Point], HashSet<Point>> = HashMap::new();
        for sol in solutions {
            children.entry(&sol[..k]).or_default().insert(sol[k]);
        }
        let mut counts: Vec<usize> = children.values().map(HashSet::len).collect();
        counts.sort_unstable();
        counts.dedup();
        levels.push(counts);
    }
    BasisBranching {
        basis: basis.to_vec(),
        choices_per_level: levels,
    }
}

/// All linear maps L with L(source) = target.
pub fn linear_transporters(
    dim: Dimension,
    source: PointSet,
    target: PointSet,
) -> Result<Vec<LinearMap>> {
    let mut out = Vec::new();
    linear_transporter_search(dim, source, target, MAX_MATERIALIZED, |m| {
        out.push(m);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// All affine maps g with g(source) = target.
pub fn affine_transporters(
    dim: Dimension,
    source: PointSet,
    target: PointSet,
) -> Result<Vec<AffineMap>> {
    let mut out = Vec::new();
    affine_transporter_search(dim, source, target, MAX_MATERIALIZED, |g| {
        out.push(g);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

fn affine_transporter_search<F>(
    dim: Dimension,
    source: PointSet,
    target: PointSet,
    limit: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(AffineMap) -> ControlFlow<()>,
{
    let space = dim.space();
    if source.len() != target.len() {
        return Ok(());
    }
    let Some(base) = source.min() else {
        let needed = group_order(dim, Ambient::Affine);
        if needed > limit {
            return Err(Error::Capacity {
                what: "transporter set",
                needed,
                limit,
            });
        }
        for l in enumerate_gl(dim) {
            for b in space.points() {
                if visit(AffineMap::new(l, b)).is_break() {
                    return Ok(());
                }
            }
        }
        return Ok(());
    };
    let shifted = space.translate(source, space.neg(base));
    let mut stop = false;
    for q in target {
        let goal = space.translate(target, space.neg(q));
        linear_transporter_search(dim, shifted, goal, limit, |l| {
            // v ↦ L(v - base) + q
            let g = AffineMap::new(l, space.sub(q, l.apply(base)));
            let flow = visit(g);
            stop = flow.is_break();
            flow
        })?;
        if stop {
            break;
        }
    }
    Ok(())
}

/// A witness g with g(s) = t, if one exists in the ambient group.
pub fn transporter(
    dim: Dimension,
    s: PointSet,
    t: PointSet,
    ambient: Ambient,
) -> Result<Option<AffineMap>> {
    if s.len() != t.len() {
        return Ok(None);
    }
    let space = dim.space();
    // Contained-line counts are an affine invariant.
    if space.lines_within(s) != space.lines_within(t) {
        return Ok(None);
    }
    let mut found = None;
    match ambient {
        Ambient::Linear => {
            linear_transporter_search(dim, s, t, u64::MAX, |l| {
                found = Some(l.into());
                ControlFlow::Break(())
            })?;
        }
        Ambient::Affine => {
            affine_transporter_search(dim, s, t, u64::MAX, |g| {
                found = Some(g);
                ControlFlow::Break(())
            })?;
        }
    }
    Ok(found)
}

/// How a stabilizer is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilizerMethod {
    /// Choose images of a basis inside the set, pruning by already-determined
    /// points.
    BasisImage,
    /// Filter an exhaustive enumeration of the ambient group.
    Sweep,
}

/// Elements of the ambient group mapping `s` onto itself.
pub fn setwise_stabilizer(
    dim: Dimension,
    s: PointSet,
    ambient: Ambient,
    method: StabilizerMethod,
) -> Result<MatrixGroup> {
    let elements: Vec<AffineMap> = match (method, ambient) {
        (StabilizerMethod::BasisImage, Ambient::Linear) => linear_transporters(dim, s, s)?
            .into_iter()
            .map(Into::into)
            .collect(),
        (StabilizerMethod::BasisImage, Ambient::Affine) => affine_transporters(dim, s, s)?,
        (StabilizerMethod::Sweep, Ambient::Linear) => {
            let order = stabilizer_order_sweep(dim, s, Ambient::Linear)?;
            if order > MAX_MATERIALIZED {
                return Err(Error::Capacity {
                    what: "stabilizer",
                    needed: order,
                    limit: MAX_MATERIALIZED,
                });
            }
            filter_gl(dim, |m| m.maps_into(s, s))
                .into_iter()
                .map(Into::into)
                .collect()
        }
        (StabilizerMethod::Sweep, Ambient::Affine) => {
            if dim.get() > 3 {
                return Err(Error::Capacity {
                    what: "affine sweep",
                    needed: group_order(dim, Ambient::Affine),
                    limit: group_order(Dimension::THREE, Ambient::Affine),
                });
            }
            let space = dim.space();
            let mut out = Vec::new();
            for l in enumerate_gl(dim) {
                for b in space.points() {
                    let g = AffineMap::new(l, b);
                    if g.apply_set(s) == s {
                        out.push(g);
                    }
                }
            }
            out
        }
    };
    Ok(MatrixGroup::from_elements(dim, elements))
}

/// Order of the stabilizer of `s`, by streaming the whole ambient group.
pub fn stabilizer_order_sweep(dim: Dimension, s: PointSet, ambient: Ambient) -> Result<u64> {
    match ambient {
        Ambient::Linear => Ok(count_gl(dim, |m| m.maps_into(s, s))),
        Ambient::Affine => {
            let space = dim.space();
            Ok(space
                .points()
                .map(|b| {
                    count_gl(dim, |m| {
                        s.iter().all(|p| s.contains(space.add(m.apply(p), b)))
                    })
                })
                .sum())
        }
    }
}

/// Branching structure of the basis-image stabilizer search on `s`.
pub fn stabilizer_branching(dim: Dimension, s: PointSet) -> Result<BasisBranching> {
    Ok(
        linear_transporter_search(dim, s, s, MAX_MATERIALIZED, |_| ControlFlow::Continue(()))?
            .unwrap_or_default(),
    )
}

/// A finite group of affine maps held as an explicit, sorted element list.
#[derive(Clone, Debug)]
pub struct MatrixGroup {
    dim: Dimension,
    elements: Vec<AffineMap>,
    generators: Vec<AffineMap>,
    index: HashMap<MapKey, usize>,
}

impl PartialEq for MatrixGroup {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.elements == other.elements
    }
}

impl Eq for MatrixGroup {}

impl MatrixGroup {
    /// Wraps an explicit element set. Duplicates are removed; closure is not
    /// checked (see [`MatrixGroup::verify_closed`]).
    pub fn from_elements(dim: Dimension, mut elements: Vec<AffineMap>) -> Self {
        elements.sort_unstable_by_key(AffineMap::key);
        elements.dedup();
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, g)| (g.key(), i))
            .collect();
        MatrixGroup {
            dim,
            elements,
            generators: Vec::new(),
            index,
        }
    }

    pub fn trivial(dim: Dimension) -> Self {
        Self::from_elements(dim, vec![AffineMap::identity(dim)])
    }

    /// The group generated by `gens`, by breadth-first closure.
    pub fn generated_by(dim: Dimension, gens: &[AffineMap]) -> Result<Self> {
        let id = AffineMap::identity(dim);
        let mut seen: HashMap<MapKey, AffineMap> = HashMap::from([(id.key(), id)]);
        let mut queue = VecDeque::from([id]);
        while let Some(g) = queue.pop_front() {
            for h in gens {
                let gh = g.compose(h);
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(gh.key()) {
                    e.insert(gh);
                    queue.push_back(gh);
                    if seen.len() as u64 > MAX_MATERIALIZED {
                        return Err(Error::Capacity {
                            what: "generated group",
                            needed: seen.len() as u64,
                            limit: MAX_MATERIALIZED,
                        });
                    }
                }
            }
        }
        let mut group = Self::from_elements(dim, seen.into_values().collect());
        group.generators = gens.to_vec();
        Ok(group)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[AffineMap] {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = &AffineMap> {
        self.elements.iter()
    }

    pub fn contains(&self, g: &AffineMap) -> bool {
        self.index.contains_key(&g.key())
    }

    pub fn position(&self, g: &AffineMap) -> Option<usize> {
        self.index.get(&g.key()).copied()
    }

    pub fn is_linear(&self) -> bool {
        self.elements.iter().all(AffineMap::is_linear)
    }

    pub fn is_subgroup_of(&self, other: &MatrixGroup) -> bool {
        self.elements.iter().all(|g| other.contains(g))
    }

    /// Counts of elements with determinant 1 and 2.
    pub fn determinant_split(&self) -> [usize; 2] {
        let ones = self.elements.iter().filter(|g| g.determinant() == 1).count();
        [ones, self.elements.len() - ones]
    }

    pub fn subgroup_where<P: Fn(&AffineMap) -> bool>(&self, pred: P) -> MatrixGroup {
        Self::from_elements(
            self.dim,
            self.elements.iter().copied().filter(|g| pred(g)).collect(),
        )
    }

    /// A small generating set, chosen greedily in element order.
    pub fn generators(&self) -> Vec<AffineMap> {
        if !self.generators.is_empty() {
            return self.generators.clone();
        }
        let mut gens: Vec<AffineMap> = Vec::new();
        let mut covered: HashSet<MapKey> = HashSet::from([AffineMap::identity(self.dim).key()]);
        // Prefer elements of large order: they cover more per generator.
        let mut candidates: Vec<(usize, &AffineMap)> =
            self.elements.iter().map(|g| (g.order(), g)).collect();
        candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.key().cmp(&b.1.key())));
        for (_, g) in candidates {
            if covered.len() == self.elements.len() {
                break;
            }
            if covered.contains(&g.key()) {
                continue;
            }
            gens.push(*g);
            covered = Self::generated_by(self.dim, &gens)
                .expect("subgroup of a materialized group")
                .elements
                .iter()
                .map(AffineMap::key)
                .collect();
        }
        gens
    }

    /// Exhaustive closure check: identity, products and inverses.
    pub fn verify_closed(&self) -> Result<()> {
        let perms: Vec<Vec<u8>> = self.elements.iter().map(AffineMap::permutation).collect();
        let frame: Vec<usize> = frame(self.dim).iter().map(|p| p.index()).collect();
        if !self.contains(&AffineMap::identity(self.dim)) {
            return Err(Error::InvariantViolation("identity missing".into()));
        }
        let mut images = vec![0u8; frame.len()];
        for g in &perms {
            for h in &perms {
                for (slot, &f) in images.iter_mut().zip(&frame) {
                    *slot = g[h[f] as usize];
                }
                if !self.index.contains_key(&MapKey::from_images(&images)) {
                    return Err(Error::InvariantViolation(
                        "product escapes the group".into(),
                    ));
                }
            }
        }
        if !self.elements.iter().all(|g| self.contains(&g.inverse())) {
            return Err(Error::InvariantViolation("inverse escapes the group".into()));
        }
        Ok(())
    }
}

impl Serialize for MatrixGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut strings: Vec<String> = self
            .elements
            .iter()
            .map(|g| {
                if self.is_linear() {
                    g.linear.to_trit_string()
                } else {
                    g.to_trit_string()
                }
            })
            .collect();
        strings.sort();
        serializer.collect_seq(strings)
    }
}

/// Orbit of `s` under the group generated by `gens`, sorted lexicographically.
pub fn orbit_under_generators(dim: Dimension, s: PointSet, gens: &[AffineMap]) -> Vec<PointSet> {
    let _ = dim;
    let mut seen: HashSet<PointSet> = HashSet::from([s]);
    let mut queue = VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = g.apply_set(x);
            if seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    let mut orbit: Vec<PointSet> = seen.into_iter().collect();
    orbit.sort_unstable_by(|a, b| a.lex_cmp(*b));
    orbit
}

/// All distinct images of `s` under `group`.
pub fn orbit(s: PointSet, group: &MatrixGroup) -> Vec<PointSet> {
    orbit_under_generators(group.dim, s, &group.generators())
}
