//! Backtracking searches over caps.
//!
//! Three engines share the same shape (include the smallest available point,
//! then exclude it) so every set is produced once and equal-size results come
//! out in lexicographic order:
//!
//! * [`for_each_cap`] works in any dimension over an arbitrary candidate set.
//! * [`pair_closed_caps`] picks whole pairs `{p, -p}`, which is how
//!   caps with anchor `0` look in AG(4,3).
//! * [`bounded_extension_search`] extends a fixed cap while capping every
//!   hyperplane intersection, the building block of the proof that AG(4,3)
//!   has no 21-cap.

use std::ops::ControlFlow;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::affine::{aff_generators, orbit_under_generators};
use crate::geometry::{Dimension, Point, Space};
use crate::pointset::PointSet;

/// Thirds of the lines through `p` and a point of `s`.
#[inline]
pub fn thirds(space: &Space, p: Point, s: PointSet) -> PointSet {
    let mut out = PointSet::EMPTY;
    for q in s {
        out.insert(space.third_unchecked(p, q));
    }
    out
}

/// Points that would complete a line with two points of `s`.
pub fn blocked_by(space: &Space, s: PointSet) -> PointSet {
    let mut out = PointSet::EMPTY;
    let mut rest = s;
    while let Some(p) = rest.min() {
        rest.remove(p);
        out |= thirds(space, p, rest);
    }
    out
}

/// Visits every cap of size `k` that contains `required` and otherwise uses
/// only points of `candidates`, in lexicographic order. Returns `Break` if
/// `visit` stopped the search.
pub fn for_each_cap<F>(
    dim: Dimension,
    k: usize,
    required: PointSet,
    candidates: PointSet,
    mut visit: F,
) -> ControlFlow<()>
where
    F: FnMut(PointSet) -> ControlFlow<()>,
{
    let space = dim.space();
    let blocked = blocked_by(space, required);
    if !blocked.is_disjoint(required) || required.len() > k {
        return ControlFlow::Continue(());
    }
    let avail = (candidates - required) - blocked;
    cap_dfs(space, k, required, avail, &mut visit)
}

fn cap_dfs<F>(space: &Space, k: usize, cap: PointSet, avail: PointSet, visit: &mut F) -> ControlFlow<()>
where
    F: FnMut(PointSet) -> ControlFlow<()>,
{
    if cap.len() == k {
        return visit(cap);
    }
    if cap.len() + avail.len() < k {
        return ControlFlow::Continue(());
    }
    let p = avail.min().expect("avail is nonempty");
    let rest = avail.without(p);
    cap_dfs(space, k, cap.with(p), rest - thirds(space, p, cap), visit)?;
    cap_dfs(space, k, cap, rest, visit)
}

/// Whether some cap of size `k` contains `required` inside `candidates`.
pub fn cap_exists(dim: Dimension, k: usize, required: PointSet, candidates: PointSet) -> Option<PointSet> {
    let mut found = None;
    let _ = for_each_cap(dim, k, required, candidates, |c| {
        found = Some(c);
        ControlFlow::Break(())
    });
    found
}

/// The affine frame `{0, e_n, e_{n-1}, ...}` of the first `points` frame
/// points, i.e. indices `0, 1, 3, 9, 27`.
pub fn frame_points(points: usize) -> PointSet {
    std::iter::once(0)
        .chain((0..points.saturating_sub(1)).map(|i| 3usize.pow(i as u32)))
        .map(|i| Point::new_unchecked(i as u8))
        .collect()
}

/// Largest cap size in AG(n,3) by exhaustive search, for n <= 3.
///
/// A cap with more than `n` points in general position can be moved so that
/// it contains an affine frame, so every existence query after the first
/// few sizes is seeded with `{0, e_n, e_{n-1}, ...}`.
pub fn largest_cap_size(dim: Dimension) -> usize {
    let universe = dim.universe();
    let mut best = 0;
    for k in 1..=dim.size() {
        let seed = seed_frame(dim, k);
        if cap_exists(dim, k, seed, universe).is_some() {
            best = k;
        } else {
            break;
        }
    }
    best
}

/// The frame a `k`-cap can be assumed to contain. A cap of size `k` spans an
/// affine subspace of dimension at least `d` whenever `k` exceeds the
/// largest cap size in dimension `d - 1`; caps of dimension up to 3 have
/// sizes 2, 4 and 9, so the thresholds below only rely on smaller cases.
fn seed_frame(dim: Dimension, k: usize) -> PointSet {
    // Smallest affine dimension a cap of size k must span.
    let needed = match k {
        0 => 0,
        1 => 0,
        2 => 1,
        3 | 4 => 2,
        5..=9 => 3,
        _ => 4,
    };
    frame_points(needed.min(dim.n()) + 1)
}

/// Caps of size `k` that cannot be extended, first one found in
/// lexicographic order among caps containing an affine frame.
pub fn find_complete_cap(dim: Dimension, k: usize) -> Option<PointSet> {
    let space = dim.space();
    let mut found = None;
    let _ = for_each_cap(dim, k, seed_frame(dim, k), dim.universe(), |c| {
        if (c | blocked_by(space, c)) == dim.universe() {
            found = Some(c);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    found
}

/// Pairs `{p, -p}` with both points in `within`, ordered by their smaller
/// element.
pub fn pair_classes(space: &Space, within: PointSet) -> Vec<PointSet> {
    within
        .iter()
        .filter(|&p| p != Point::ORIGIN)
        .filter_map(|p| {
            let q = space.neg(p);
            (p < q && within.contains(q)).then(|| PointSet::from_points([p, q]))
        })
        .collect()
}

/// Visits every cap made of `classes` whole pairs `{p, -p}` inside `within`
/// (a union of pairs not containing the origin). When `seed` is given only
/// caps containing it are visited. Shards of the search run in parallel;
/// results are collected and returned in lexicographic order.
pub fn pair_closed_caps(dim: Dimension, within: PointSet, classes: usize, seed: Option<Point>) -> Vec<PointSet> {
    let space = dim.space();
    let pairs = pair_classes(space, within);
    let start: Vec<usize> = match seed {
        Some(s) => pairs.iter().position(|c| c.contains(s)).into_iter().collect(),
        None => (0..pairs.len()).collect(),
    };
    // Shard i: pair i is the first chosen one, unless a seed forces it.
    let mut caps: Vec<PointSet> = start
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut out = Vec::new();
            let forced = seed.is_some();
            let avail: u64 = if forced {
                pair_mask(pairs.len()) & !(1 << first)
            } else {
                pair_mask(pairs.len()) & !((1u64 << (first + 1)) - 1)
            };
            let cap = pairs[first];
            let blocked = blocked_by(space, cap);
            let avail = prune_pairs(&pairs, avail, blocked);
            let _ = pair_dfs(space, &pairs, classes, cap, blocked, avail, &mut |c| {
                out.push(c);
                ControlFlow::Continue(())
            });
            out
        })
        .collect();
    caps.sort_unstable_by(|a, b| a.lex_cmp(*b));
    caps
}

/// First pair-closed cap with `classes` pairs inside `within` in
/// lexicographic order. The include-first search order over pairs sorted by
/// smaller element is the lexicographic order on the sorted point lists,
/// because the smallest point where two pair-closed sets differ is always
/// the smaller element of a pair in their symmetric difference.
pub fn first_pair_closed_cap(dim: Dimension, within: PointSet, classes: usize) -> Option<PointSet> {
    let space = dim.space();
    let pairs = pair_classes(space, within);
    let mut found = None;
    let _ = pair_dfs(
        space,
        &pairs,
        classes,
        PointSet::EMPTY,
        PointSet::EMPTY,
        pair_mask(pairs.len()),
        &mut |c| {
            found = Some(c);
            ControlFlow::Break(())
        },
    );
    found
}

fn pair_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

fn prune_pairs(pairs: &[PointSet], mut avail: u64, blocked: PointSet) -> u64 {
    let mut bits = avail;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        if !pairs[i].is_disjoint(blocked) {
            avail &= !(1 << i);
        }
    }
    avail
}

fn pair_dfs<F>(
    space: &Space,
    pairs: &[PointSet],
    classes: usize,
    cap: PointSet,
    blocked: PointSet,
    avail: u64,
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(PointSet) -> ControlFlow<()>,
{
    let have = cap.len() / 2;
    if have == classes {
        return visit(cap);
    }
    if have + (avail.count_ones() as usize) < classes {
        return ControlFlow::Continue(());
    }
    let i = avail.trailing_zeros() as usize;
    let rest = avail & !(1 << i);
    let pair = pairs[i];
    let mut new_blocked = blocked;
    for p in pair {
        new_blocked |= thirds(space, p, cap);
    }
    // The pair itself spans a line through the origin, which is never in the cap.
    let next = prune_pairs(pairs, rest, new_blocked);
    pair_dfs(space, pairs, classes, cap | pair, new_blocked, next, visit)?;
    pair_dfs(space, pairs, classes, cap, blocked, rest, visit)
}

/// Per-point slice membership for every hyperplane direction.
struct SliceTable {
    /// `slices[d][i]`: points of the i-th parallel hyperplane of direction d.
    slices: Vec<[PointSet; 3]>,
    /// `slice_of[p][d]`: which slice of direction d contains p.
    slice_of: Vec<Vec<u8>>,
}

impl SliceTable {
    fn new(space: &Space) -> Self {
        let slices: Vec<[PointSet; 3]> = space
            .hyperplane_families()
            .into_iter()
            .map(|f| f.slices)
            .collect();
        let slice_of = space
            .points()
            .map(|p| {
                slices
                    .iter()
                    .map(|s| s.iter().position(|h| h.contains(p)).expect("slices cover") as u8)
                    .collect()
            })
            .collect();
        SliceTable { slices, slice_of }
    }

    fn counts(&self, s: PointSet) -> Vec<[u8; 3]> {
        self.slices
            .iter()
            .map(|sl| sl.map(|h| (h & s).len() as u8))
            .collect()
    }
}

/// Outcome of [`bounded_extension_search`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct ExtensionOutcome {
    pub found: Option<PointSet>,
    pub nodes: u64,
}

/// Searches for a cap of size `k` containing `base`, adding only points of
/// `candidates`, such that no hyperplane meets it in more than `max_slice`
/// points.
pub fn bounded_extension_search(
    dim: Dimension,
    base: PointSet,
    candidates: PointSet,
    k: usize,
    max_slice: usize,
) -> ExtensionOutcome {
    let space = dim.space();
    let table = SliceTable::new(space);
    let counts = table.counts(base);
    if counts.iter().flatten().any(|&c| c as usize > max_slice) {
        return ExtensionOutcome::default();
    }
    let mut avail = (candidates - base) - blocked_by(space, base);
    for (d, c) in counts.iter().enumerate() {
        for i in 0..3 {
            if c[i] as usize == max_slice {
                avail = avail - table.slices[d][i];
            }
        }
    }
    let mut search = Extension {
        space,
        table: &table,
        k,
        max_slice: max_slice as u8,
        nodes: 0,
        found: None,
    };
    let mut counts = counts;
    let _ = search.dfs(base, avail, &mut counts);
    ExtensionOutcome {
        found: search.found,
        nodes: search.nodes,
    }
}

struct Extension<'a> {
    space: &'a Space,
    table: &'a SliceTable,
    k: usize,
    max_slice: u8,
    nodes: u64,
    found: Option<PointSet>,
}

impl Extension<'_> {
    /// Upper bound on the final cap size: in every direction each slice can
    /// end with at most `min(max_slice, current + available)` points.
    fn bound(&self, cap: PointSet, avail: PointSet, counts: &[[u8; 3]]) -> usize {
        let _ = cap;
        let m = self.max_slice as usize;
        self.table
            .slices
            .iter()
            .zip(counts)
            .map(|(sl, c)| {
                (0..3)
                    .map(|i| (c[i] as usize + (sl[i] & avail).len()).min(m))
                    .sum::<usize>()
            })
            .min()
            .unwrap_or(usize::MAX)
    }

    fn dfs(&mut self, cap: PointSet, avail: PointSet, counts: &mut Vec<[u8; 3]>) -> ControlFlow<()> {
        self.nodes += 1;
        if cap.len() == self.k {
            self.found = Some(cap);
            return ControlFlow::Break(());
        }
        if cap.len() + avail.len() < self.k || self.bound(cap, avail, counts) < self.k {
            return ControlFlow::Continue(());
        }
        let p = avail.min().expect("nonempty");
        let rest = avail.without(p);

        let mut next = rest - thirds(self.space, p, cap);
        let slots = &self.table.slice_of[p.index()];
        for (d, &i) in slots.iter().enumerate() {
            counts[d][i as usize] += 1;
            if counts[d][i as usize] == self.max_slice {
                next = next - self.table.slices[d][i as usize];
            }
        }
        let flow = self.dfs(cap.with(p), next, counts);
        for (d, &i) in slots.iter().enumerate() {
            counts[d][i as usize] -= 1;
        }
        flow?;
        self.dfs(cap, rest, counts)
    }
}

/// Result of the structured search for a `k`-cap in AG(4,3).
#[derive(Clone, Debug, Serialize)]
pub struct StructuredSearch {
    pub size: usize,
    /// Per largest-slice value m: (number of m-cap classes of AG(3,3) tried,
    /// search nodes visited).
    pub cases: Vec<SliceCase>,
    pub found: Option<PointSet>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceCase {
    pub max_slice: usize,
    pub base_classes: usize,
    pub nodes: u64,
    pub found: bool,
}

/// Decides whether AG(4,3) has a cap of size `k` (`k >= 19`).
///
/// Let m be the largest number of cap points on one hyperplane. Three
/// parallel hyperplanes cover the space and each meets the cap in a cap of
/// AG(3,3), so `ceil(k/3) <= m <= 9`. An affine map moves a hyperplane
/// achieving m to `{x_0 = 0}` and, since the affine group of that
/// hyperplane extends to the whole space, the slice itself can be taken to
/// be any representative of its affine class of m-caps in AG(3,3). Each
/// class representative is then extended by points off the hyperplane with
/// every hyperplane intersection held at most m.
pub fn structured_cap_search(k: usize) -> StructuredSearch {
    let dim3 = Dimension::THREE;
    let dim4 = Dimension::FOUR;
    let space4 = dim4.space();
    let hyper0 = PointSet::full(27);
    let outside = space4.universe() - hyper0;
    let mut cases = Vec::new();
    let mut found = None;
    let low = k.div_ceil(3);
    for m in (low..=9).rev() {
        let reps = cap_class_representatives(dim3, m);
        let nodes = AtomicU64::new(0);
        let hit = reps.par_iter().find_map_first(|&base| {
            // Indices of AG(3,3) are the indices of {x_0 = 0} in AG(4,3).
            let out = bounded_extension_search(dim4, base, outside, k, m);
            nodes.fetch_add(out.nodes, Ordering::Relaxed);
            out.found
        });
        cases.push(SliceCase {
            max_slice: m,
            base_classes: reps.len(),
            nodes: nodes.into_inner(),
            found: hit.is_some(),
        });
        if hit.is_some() {
            found = hit;
            break;
        }
    }
    StructuredSearch { size: k, cases, found }
}

/// One representative (the lexicographically least) of every affine class
/// of `m`-caps in AG(n,3), for n <= 3.
pub fn cap_class_representatives(dim: Dimension, m: usize) -> Vec<PointSet> {
    let gens = aff_generators(dim);
    let mut all: Vec<PointSet> = Vec::new();
    let _ = for_each_cap(dim, m, PointSet::EMPTY, dim.universe(), |c| {
        all.push(c);
        ControlFlow::Continue(())
    });
    let mut seen = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for c in all {
        if seen.contains(&c) {
            continue;
        }
        let orbit = orbit_under_generators(dim, c, &gens);
        reps.push(orbit[0]);
        seen.extend(orbit);
    }
    reps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_caps(dim: Dimension, k: usize) -> Vec<PointSet> {
        let space = dim.space();
        let size = dim.size();
        let mut out: Vec<PointSet> = (0u64..1 << size)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| PointSet::from_bits(m as u128))
            .filter(|&s| {
                s.iter().all(|p| {
                    s.iter()
                        .all(|q| p == q || !s.contains(space.third_unchecked(p, q)))
                })
            })
            .collect();
        out.sort_unstable_by(|a, b| a.lex_cmp(*b));
        out
    }

    #[test]
    fn cap_dfs_matches_brute_force_in_the_plane() {
        let dim = Dimension::TWO;
        for k in 0..=5 {
            let mut found = Vec::new();
            let _ = for_each_cap(dim, k, PointSet::EMPTY, dim.universe(), |c| {
                found.push(c);
                ControlFlow::Continue(())
            });
            assert_eq!(found, brute_caps(dim, k), "k = {k}");
        }
    }

    #[test]
    fn largest_caps_in_low_dimension() {
        assert_eq!(largest_cap_size(Dimension::ONE), 2);
        assert_eq!(largest_cap_size(Dimension::TWO), 4);
        assert_eq!(largest_cap_size(Dimension::THREE), 9);
    }

    #[test]
    fn blocked_points_complete_lines() {
        let space = Dimension::TWO.space();
        let s = PointSet::from_indices([0, 1]);
        assert_eq!(blocked_by(space, s), PointSet::from_indices([2]));
    }

    #[test]
    fn pair_search_agrees_with_generic_search_in_the_plane() {
        // In AG(2,3) the 4-caps with anchor 0 are exactly the pair-closed ones.
        let dim = Dimension::TWO;
        let space = dim.space();
        let within = dim.universe().without(Point::ORIGIN);
        let pairs = pair_closed_caps(dim, within, 2, None);
        let generic: Vec<PointSet> = brute_caps(dim, 4)
            .into_iter()
            .filter(|&c| space.sum(c) == Point::ORIGIN && !c.contains(Point::ORIGIN))
            .collect();
        assert_eq!(pairs, generic);
        assert_eq!(first_pair_closed_cap(dim, within, 2), generic.first().copied());
    }

    #[test]
    fn complete_eight_cap_in_three_space() {
        let dim = Dimension::THREE;
        let c = find_complete_cap(dim, 8).expect("a complete 8-cap exists");
        assert_eq!(c.len(), 8);
        assert_eq!(c | blocked_by(dim.space(), c), dim.universe());
        assert!(blocked_by(dim.space(), c).is_disjoint(c));
    }

    #[test]
    fn bounded_extension_respects_slices() {
        let dim = Dimension::THREE;
        let out = bounded_extension_search(dim, PointSet::EMPTY, dim.universe(), 9, 4);
        let c = out.found.expect("9-cap with slices of at most 4");
        for f in dim.space().hyperplane_families() {
            assert!(f.slices.iter().all(|h| (*h & c).len() <= 4));
        }
        let none = bounded_extension_search(dim, PointSet::EMPTY, dim.universe(), 9, 3);
        assert!(none.found.is_none(), "a 9-cap always has a 4-point slice");
    }

    #[test]
    fn single_affine_class_of_nine_caps() {
        assert_eq!(cap_class_representatives(Dimension::THREE, 9).len(), 1);
    }
}
