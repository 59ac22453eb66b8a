//! Partitions of AG(n,3) into disjoint maximal caps (plus the common anchor
//! when n is even), how a cap completes to partitions, and the two classes
//! of partitions of AG(4,3).

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{
    aff_generators, affine_transporters, AffineMap, LinearMap, MatrixGroup,
};
use crate::caps::{
    anchor0_caps, anchor_point, caps_with_anchor, enumerate_maximal_caps, is_cap,
    known_max_cap_size,
};
use crate::error::{Error, Result};
use crate::geometry::{Dimension, Point};
use crate::pointset::PointSet;
use crate::search;

const FOUR: Dimension = Dimension::FOUR;

/// Disjoint maximal caps covering the space, together with their common
/// anchor in even dimension. Blocks are kept in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    dim: Dimension,
    anchor: Option<Point>,
    blocks: Vec<PointSet>,
}

impl Partition {
    pub fn new(dim: Dimension, mut blocks: Vec<PointSet>) -> Result<Self> {
        let (count, anchored) = match dim.n() {
            2 => (2, true),
            3 => (3, false),
            4 => (4, true),
            _ => {
                return Err(Error::Precondition(format!(
                    "no cap partitions are modelled in dimension {dim}"
                )))
            }
        };
        if blocks.len() != count {
            return Err(Error::Precondition(format!(
                "expected {count} blocks, found {}",
                blocks.len()
            )));
        }
        let size = known_max_cap_size(dim);
        let mut union = PointSet::EMPTY;
        for &b in &blocks {
            if !b.is_subset(dim.universe()) || b.len() != size || !is_cap(dim, b) {
                return Err(Error::NotMaximal {
                    dim: dim.get(),
                    size: b.len(),
                    expected: size,
                });
            }
            if !union.is_disjoint(b) {
                return Err(Error::Precondition("blocks overlap".into()));
            }
            union |= b;
        }
        let rest = dim.universe() - union;
        let anchor = if anchored {
            let a = rest
                .min()
                .filter(|_| rest.len() == 1)
                .ok_or_else(|| Error::Precondition("blocks leave more than the anchor".into()))?;
            for &b in &blocks {
                if anchor_point(dim, b)? != a {
                    return Err(Error::Precondition(format!(
                        "a block does not have anchor {a}"
                    )));
                }
            }
            Some(a)
        } else {
            if !rest.is_empty() {
                return Err(Error::Precondition("blocks do not cover the space".into()));
            }
            None
        };
        blocks.sort_unstable_by(|x, y| x.lex_cmp(*y));
        Ok(Partition {
            dim,
            anchor,
            blocks,
        })
    }

    /// Builds a partition whose validity the caller has already ensured.
    fn from_blocks_unchecked(dim: Dimension, anchor: Option<Point>, mut blocks: Vec<PointSet>) -> Self {
        blocks.sort_unstable_by(|x, y| x.lex_cmp(*y));
        Partition {
            dim,
            anchor,
            blocks,
        }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn anchor(&self) -> Option<Point> {
        self.anchor
    }

    pub fn blocks(&self) -> &[PointSet] {
        &self.blocks
    }

    pub fn contains_block(&self, b: PointSet) -> bool {
        self.blocks.contains(&b)
    }

    pub fn apply(&self, g: &AffineMap) -> Partition {
        Partition::from_blocks_unchecked(
            self.dim,
            self.anchor.map(|a| g.apply(a)),
            self.blocks.iter().map(|&b| g.apply_set(b)).collect(),
        )
    }

    /// Every point is covered exactly once by the blocks and the anchor.
    pub fn is_well_formed(&self) -> bool {
        Partition::new(self.dim, self.blocks.clone()).is_ok_and(|p| p == *self)
    }
}

impl Ord for Partition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim.cmp(&other.dim).then_with(|| {
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.lex_cmp(*b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// In how many ways the rest of the space splits into two maximal caps once
/// `s` and a disjoint cap are fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletabilityClass {
    One,
    Two,
    Six,
}

impl CompletabilityClass {
    pub fn from_count(count: usize) -> Result<Self> {
        match count {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            6 => Ok(Self::Six),
            other => Err(Error::InvariantViolation(format!(
                "a disjoint cap completes in {other} ways"
            ))),
        }
    }

    pub fn count(self) -> usize {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Six => 6,
        }
    }
}

/// The two classes of partitions of AG(4,3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartitionClass {
    E1,
    E2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairType {
    /// The two caps appear together in exactly one partition.
    OnePair,
    /// ... in exactly two.
    TwoPair,
}

/// Number of partitions containing two given disjoint caps, with its type
/// when the count is 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairTypeReport {
    pub shared_partitions: usize,
    pub pair_type: Option<PairType>,
}

fn require_maximal4(s: PointSet) -> Result<Point> {
    anchor_point(FOUR, s)
}

/// Every maximal cap of AG(4,3) disjoint from `s`, in lexicographic order.
/// All 81 anchors are scanned, not just the anchor of `s`.
pub fn disjoint_caps(s: PointSet) -> Result<Vec<PointSet>> {
    require_maximal4(s)?;
    let space = FOUR.space();
    let mut out: Vec<PointSet> = space
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|a| {
            anchor0_caps()
                .iter()
                .map(move |&c| space.translate(c, a))
                .filter(|c| c.is_disjoint(s))
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_unstable_by(|x, y| x.lex_cmp(*y));
    Ok(out)
}

/// Outcome of checking that `s` meets every maximal cap with another anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AnchorIntersection {
    pub caps_tested: u64,
    pub disjoint_cross_anchor: u64,
}

impl AnchorIntersection {
    pub fn holds(&self) -> bool {
        self.disjoint_cross_anchor == 0
    }
}

pub fn verify_anchor_intersection(s: PointSet) -> Result<AnchorIntersection> {
    let anchor = require_maximal4(s)?;
    let space = FOUR.space();
    let others: Vec<Point> = space.points().filter(|&a| a != anchor).collect();
    let (tested, disjoint) = others
        .into_par_iter()
        .map(|a| {
            let mut disjoint = 0u64;
            for &c in anchor0_caps() {
                if space.translate(c, a).is_disjoint(s) {
                    disjoint += 1;
                }
            }
            (anchor0_caps().len() as u64, disjoint)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(AnchorIntersection {
        caps_tested: tested,
        disjoint_cross_anchor: disjoint,
    })
}

/// Maximal caps `d` inside `residual` (40 points, a union of lines through
/// `anchor` minus the anchor) such that `residual - d` is also a maximal
/// cap. Only the member of each split containing the least residual point
/// is returned, so every unordered split appears once.
///
/// A cap disjoint from a maximal cap shares its anchor, so both halves
/// consist of pairs on lines through `anchor`.
pub fn residual_splits(anchor: Point, residual: PointSet) -> Vec<PointSet> {
    let space = FOUR.space();
    let shift = space.neg(anchor);
    let r0 = space.translate(residual, shift);
    if r0.contains(Point::ORIGIN) || r0.len() != 40 {
        return Vec::new();
    }
    let seed = r0.min();
    search::pair_closed_caps(FOUR, r0, 10, seed)
        .into_iter()
        .filter(|&d| is_cap(FOUR, r0 - d))
        .map(|d| space.translate(d, anchor))
        .collect()
}

fn residual_of(anchor: Point, s: PointSet, c: PointSet) -> PointSet {
    FOUR.universe().without(anchor) - s - c
}

fn check_pair(s: PointSet, c: PointSet) -> Result<Point> {
    let a = require_maximal4(s)?;
    let b = require_maximal4(c)?;
    if !s.is_disjoint(c) {
        return Err(Error::Precondition("caps are not disjoint".into()));
    }
    if a != b {
        return Err(Error::Precondition(format!(
            "caps have different anchors {a} and {b}"
        )));
    }
    Ok(a)
}

/// Number of partitions containing both `s` and `c`.
pub fn shared_partition_count(s: PointSet, c: PointSet) -> Result<usize> {
    let a = check_pair(s, c)?;
    Ok(residual_splits(a, residual_of(a, s, c)).len())
}

/// Partitions containing both `s` and `c`, sorted.
pub fn complete_to_partitions(s: PointSet, c: PointSet) -> Result<Vec<Partition>> {
    let a = check_pair(s, c)?;
    let residual = residual_of(a, s, c);
    let mut out: Vec<Partition> = residual_splits(a, residual)
        .into_iter()
        .map(|d| Partition::from_blocks_unchecked(FOUR, Some(a), vec![s, c, d, residual - d]))
        .collect();
    out.sort();
    Ok(out)
}

pub fn completability(s: PointSet, c: PointSet) -> Result<CompletabilityClass> {
    CompletabilityClass::from_count(shared_partition_count(s, c)?)
}

pub fn pair_type(a: PointSet, b: PointSet) -> Result<PairTypeReport> {
    let shared = shared_partition_count(a, b)?;
    Ok(PairTypeReport {
        shared_partitions: shared,
        pair_type: match shared {
            1 => Some(PairType::OnePair),
            2 => Some(PairType::TwoPair),
            _ => None,
        },
    })
}

/// Completability of every cap disjoint from `s`.
#[derive(Clone, Debug, Serialize)]
pub struct CompletabilityCensus {
    pub one: usize,
    pub two: usize,
    pub six: usize,
    #[serde(skip)]
    pub classes: Vec<(PointSet, CompletabilityClass)>,
}

impl CompletabilityCensus {
    pub fn total(&self) -> usize {
        self.one + self.two + self.six
    }

    pub fn class_of(&self, c: PointSet) -> Option<CompletabilityClass> {
        self.classes.iter().find(|(d, _)| *d == c).map(|&(_, k)| k)
    }
}

pub fn completability_census(s: PointSet) -> Result<CompletabilityCensus> {
    let disjoint = disjoint_caps(s)?;
    let classes: Vec<(PointSet, CompletabilityClass)> = disjoint
        .par_iter()
        .map(|&c| Ok((c, completability(s, c)?)))
        .collect::<Result<_>>()?;
    let count = |k| classes.iter().filter(|(_, c)| *c == k).count();
    Ok(CompletabilityCensus {
        one: count(CompletabilityClass::One),
        two: count(CompletabilityClass::Two),
        six: count(CompletabilityClass::Six),
        classes,
    })
}

/// Every partition with `s` as a block, sorted.
pub fn partitions_containing(s: PointSet) -> Result<Vec<Partition>> {
    let disjoint = disjoint_caps(s)?;
    let found: Vec<Vec<Partition>> = disjoint
        .par_iter()
        .map(|&c| complete_to_partitions(s, c))
        .collect::<Result<_>>()?;
    let mut all: Vec<Partition> = found.into_iter().flatten().collect();
    all.sort();
    all.dedup();
    Ok(all)
}

/// Everything about the partitions through one maximal cap.
#[derive(Clone, Debug)]
pub struct CapNeighborhood {
    pub cap: PointSet,
    pub anchor: Point,
    pub census: CompletabilityCensus,
    pub partitions: Vec<Partition>,
}

impl CapNeighborhood {
    pub fn new(s: PointSet) -> Result<Self> {
        let anchor = require_maximal4(s)?;
        let census = completability_census(s)?;
        let mut partitions: Vec<Partition> = census
            .classes
            .par_iter()
            .map(|&(c, _)| complete_to_partitions(s, c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        partitions.sort();
        partitions.dedup();
        Ok(CapNeighborhood {
            cap: s,
            anchor,
            census,
            partitions,
        })
    }

    pub fn class_of_cap(&self, c: PointSet) -> Result<CompletabilityClass> {
        self.census
            .class_of(c)
            .ok_or_else(|| Error::Precondition("cap is not disjoint from the base cap".into()))
    }

    /// Block roles relative to the base cap: (the One-or-Two block, the two
    /// Six blocks in lexicographic order).
    pub fn roles(&self, p: &Partition) -> Result<(PointSet, [PointSet; 2])> {
        if !p.contains_block(self.cap) {
            return Err(Error::Precondition("partition does not contain the base cap".into()));
        }
        let mut partner = None;
        let mut sixes = Vec::new();
        for &b in p.blocks().iter().filter(|&&b| b != self.cap) {
            match self.class_of_cap(b)? {
                CompletabilityClass::Six => sixes.push(b),
                _ => {
                    if partner.replace(b).is_some() {
                        return Err(Error::InvariantViolation(
                            "two non-Six blocks in one partition".into(),
                        ));
                    }
                }
            }
        }
        match (partner, sixes.as_slice()) {
            (Some(a), &[b, c]) => Ok((a, [b, c])),
            _ => Err(Error::InvariantViolation(
                "partition does not have two Six blocks".into(),
            )),
        }
    }

    pub fn classify(&self, p: &Partition) -> Result<PartitionClass> {
        let (partner, _) = self.roles(p)?;
        Ok(match self.class_of_cap(partner)? {
            CompletabilityClass::One => PartitionClass::E1,
            _ => PartitionClass::E2,
        })
    }

    pub fn class_census(&self) -> Result<[usize; 2]> {
        let mut census = [0, 0];
        for p in &self.partitions {
            census[self.classify(p)? as usize] += 1;
        }
        Ok(census)
    }

    pub fn partitions_of_class(&self, class: PartitionClass) -> Result<Vec<Partition>> {
        let mut out = Vec::new();
        for p in &self.partitions {
            if self.classify(p)? == class {
                out.push(p.clone());
            }
        }
        Ok(out)
    }

    /// Among the partitions through the base cap and `s6`: how many are in
    /// E1 and how many in E2.
    pub fn six_profile(&self, s6: PointSet) -> Result<(usize, usize)> {
        if self.class_of_cap(s6)? != CompletabilityClass::Six {
            return Err(Error::Precondition("cap is not 6-completable".into()));
        }
        let mut profile = (0, 0);
        for p in self.partitions.iter().filter(|p| p.contains_block(s6)) {
            match self.classify(p)? {
                PartitionClass::E1 => profile.0 += 1,
                PartitionClass::E2 => profile.1 += 1,
            }
        }
        Ok(profile)
    }

    /// For `g` ranging over `group` (which must fix the base cap) with
    /// `g(A) = A'`, where A and A' are the One-or-Two blocks of `p` and `q`:
    /// how many send the Six block B of `p` to B', how many send it to C',
    /// and how many send `p` to some other partition.
    pub fn transporter_split(&self, group: &MatrixGroup, p: &Partition, q: &Partition) -> Result<TransporterSplit> {
        if self.classify(p)? != self.classify(q)? {
            return Err(Error::Precondition("partitions are in different classes".into()));
        }
        let (a, [b, _]) = self.roles(p)?;
        let (a2, [b2, c2]) = self.roles(q)?;
        let mut split = TransporterSplit::default();
        for g in group.iter() {
            if g.apply_set(self.cap) != self.cap {
                return Err(Error::Precondition("group does not fix the base cap".into()));
            }
            if g.apply_set(a) != a2 {
                continue;
            }
            split.a_to_a += 1;
            let gb = g.apply_set(b);
            if gb == b2 {
                split.b_to_b += 1;
            } else if gb == c2 {
                split.b_to_c += 1;
            } else {
                split.elsewhere += 1;
            }
        }
        Ok(split)
    }
}

/// See [`CapNeighborhood::transporter_split`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TransporterSplit {
    pub a_to_a: usize,
    pub b_to_b: usize,
    pub b_to_c: usize,
    pub elsewhere: usize,
}

impl TransporterSplit {
    pub fn is_balanced(&self) -> bool {
        self.b_to_b == self.b_to_c && self.b_to_b > 0
    }
}

/// Outcome of [`sample_transporter_splits`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SplitSample {
    pub sampled_pairs: usize,
    pub balanced: usize,
}

/// Draws `per_class` random same-class pairs of partitions through the
/// base cap for each of E1 and E2 and counts those whose transporter split
/// is balanced.
pub fn sample_transporter_splits(
    hood: &CapNeighborhood,
    group: &MatrixGroup,
    seed: u64,
    per_class: usize,
) -> Result<SplitSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for class in [PartitionClass::E1, PartitionClass::E2] {
        let members = hood.partitions_of_class(class)?;
        for _ in 0..per_class {
            let p = members.choose(&mut rng).expect("class is nonempty").clone();
            let q = members.choose(&mut rng).expect("class is nonempty").clone();
            pairs.push((p, q));
        }
    }
    let balanced = pairs
        .par_iter()
        .map(|(p, q)| Ok(hood.transporter_split(group, p, q)?.is_balanced()))
        .collect::<Result<Vec<bool>>>()?;
    Ok(SplitSample {
        sampled_pairs: pairs.len(),
        balanced: balanced.into_iter().filter(|&b| b).count(),
    })
}

/// Classification of a partition containing `s`.
pub fn classify_partition(p: &Partition, s: PointSet) -> Result<PartitionClass> {
    CapNeighborhood::new(s)?.classify(p)
}

/// The class of a partition of AG(4,3) without reference to a base cap:
/// taken relative to its first block.
pub fn partition_class(p: &Partition) -> Result<PartitionClass> {
    let s = p.blocks()[0];
    let mut class = None;
    for &b in &p.blocks()[1..] {
        match shared_partition_count(s, b)? {
            1 => class = Some(PartitionClass::E1),
            2 => class = Some(PartitionClass::E2),
            _ => {}
        }
    }
    class.ok_or_else(|| Error::InvariantViolation("no One-or-Two block".into()))
}

/// Orbits of the partitions through `s` under a group fixing `s`.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitCensus {
    /// Orbit sizes in ascending order.
    pub sizes: Vec<usize>,
    #[serde(skip)]
    pub orbits: Vec<Vec<Partition>>,
}

pub fn orbit_classes_on_partitions(group: &MatrixGroup, partitions: &[Partition]) -> OrbitCensus {
    let gens = group.generators();
    let index: HashMap<&Partition, usize> = partitions.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut seen = vec![false; partitions.len()];
    let mut orbits = Vec::new();
    for start in 0..partitions.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut orbit = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for g in &gens {
                let image = partitions[i].apply(g);
                let j = *index.get(&image).expect("group must preserve the partition set");
                if !seen[j] {
                    seen[j] = true;
                    orbit.push(j);
                    queue.push_back(j);
                }
            }
        }
        orbit.sort_unstable();
        orbits.push(orbit.into_iter().map(|i| partitions[i].clone()).collect::<Vec<_>>());
    }
    orbits.sort_by_key(|o| (o.len(), o[0].clone()));
    OrbitCensus {
        sizes: orbits.iter().map(Vec::len).collect(),
        orbits,
    }
}

/// Partition counts with a fixed anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AnchorPartitionCount {
    pub anchor: Point,
    /// Partitions found by enumeration, each once via its sorted blocks.
    pub enumerated: u64,
    pub e1: u64,
    pub e2: u64,
    /// caps · partitions-per-cap / 4.
    pub double_count: u64,
}

/// Enumerates the partitions with anchor `a`. For each cap A, the
/// partitions whose least block is A are listed as A < B < C < D with B and
/// C taken from the caps disjoint from A, and classified by the number of
/// partitions A shares with each other block.
pub fn count_partitions_anchor(a: Point, partitions_per_cap: u64) -> AnchorPartitionCount {
    let caps = caps_with_anchor(a);
    let n = caps.len();
    let index: HashMap<PointSet, u32> = caps.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
    let words = n.div_ceil(64);
    // disjoint[i]: indices of caps disjoint from cap i, ascending.
    let disjoint: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| caps[i].is_disjoint(caps[j]))
                .map(|j| j as u32)
                .collect()
        })
        .collect();
    let full = FOUR.universe().without(a);
    let (total, e1, e2) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut member = vec![0u64; words];
            for &j in &disjoint[i] {
                member[j as usize / 64] |= 1 << (j % 64);
            }
            let is_member = |j: u32| member[j as usize / 64] >> (j % 64) & 1 == 1;
            // shared[j]: partitions containing caps i and j, counted twice.
            let mut shared: HashMap<u32, u32> = HashMap::new();
            let mut mine: Vec<[u32; 3]> = Vec::new();
            for &j in &disjoint[i] {
                let mut count = 0;
                for &k in &disjoint[j as usize] {
                    if !is_member(k) {
                        continue;
                    }
                    let rest = full - caps[i] - caps[j as usize] - caps[k as usize];
                    if let Some(&l) = index.get(&rest) {
                        count += 1;
                        if (i as u32) < j && j < k && k < l {
                            mine.push([j, k, l]);
                        }
                    }
                }
                shared.insert(j, count);
            }
            let (mut e1, mut e2) = (0u64, 0u64);
            for blocks in &mine {
                let ks: Vec<u32> = blocks.iter().map(|b| shared[b] / 2).collect();
                if ks.contains(&1) {
                    e1 += 1;
                } else if ks.contains(&2) {
                    e2 += 1;
                }
            }
            (mine.len() as u64, e1, e2)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    AnchorPartitionCount {
        anchor: a,
        enumerated: total,
        e1,
        e2,
        double_count: n as u64 * partitions_per_cap / 4,
    }
}

/// An affine map sending partition `p` onto `q`, if any.
pub fn partition_transporter(p: &Partition, q: &Partition) -> Result<Option<AffineMap>> {
    let dim = p.dim();
    for &target in q.blocks() {
        for g in affine_transporters(dim, p.blocks()[0], target)? {
            if p.apply(&g) == *q {
                return Ok(Some(g));
            }
        }
    }
    Ok(None)
}

/// Checks on the two global classes of partitions of AG(4,3).
#[derive(Clone, Debug, Serialize)]
pub struct GlobalClassReport {
    /// Partitions through the canonical cap whose pair types agree across
    /// all three ways of splitting the blocks into two pairs.
    pub anchor_pairing_checked: usize,
    pub anchor_pairing_violations: usize,
    /// Partitions through the canonical cap with both pairs of each
    /// splitting of type one / two.
    pub both_one_pairs: usize,
    pub both_two_pairs: usize,
    pub invariance_samples: usize,
    pub invariance_violations: usize,
    pub same_class_pairs: usize,
    pub same_class_witnesses: usize,
    pub same_class_different_anchor: usize,
    pub cross_class_pairs: usize,
    pub cross_class_witnesses: usize,
}

impl GlobalClassReport {
    pub fn holds(&self) -> bool {
        self.anchor_pairing_violations == 0
            && self.invariance_violations == 0
            && self.same_class_witnesses == self.same_class_pairs
            && self.cross_class_witnesses == 0
    }
}

/// Pair types across the three pairings of a partition's four blocks,
/// e.g. `[(1,1), (6,6), (6,6)]`.
pub fn pairing_counts(p: &Partition) -> Result<[(usize, usize); 3]> {
    let b = p.blocks();
    let k = |x: usize, y: usize| shared_partition_count(b[x], b[y]);
    Ok([
        (k(0, 1)?, k(2, 3)?),
        (k(0, 2)?, k(1, 3)?),
        (k(0, 3)?, k(1, 2)?),
    ])
}

pub fn random_linear_map(dim: Dimension, rng: &mut impl Rng) -> LinearMap {
    loop {
        let rows: Vec<Point> = (0..dim.n())
            .map(|_| Point::new_unchecked(rng.gen_range(0..dim.size()) as u8))
            .collect();
        if let Ok(m) = LinearMap::from_rows(dim, &rows) {
            return m;
        }
    }
}

pub fn random_affine_map(dim: Dimension, rng: &mut impl Rng) -> AffineMap {
    let l = random_linear_map(dim, rng);
    AffineMap::new(l, Point::new_unchecked(rng.gen_range(0..dim.size()) as u8))
}

/// Verifies the two-class structure: the anchor pairing on every partition
/// through `s`; class invariance under `samples` random affine maps; a
/// partition transporter between every sampled same-class pair (moved to
/// other anchors); none between `cross_samples` sampled cross-class pairs.
pub fn global_equivalence_classes(
    s: PointSet,
    seed: u64,
    samples: usize,
    cross_samples: usize,
) -> Result<GlobalClassReport> {
    let hood = CapNeighborhood::new(s)?;
    let mut report = GlobalClassReport {
        anchor_pairing_checked: 0,
        anchor_pairing_violations: 0,
        both_one_pairs: 0,
        both_two_pairs: 0,
        invariance_samples: 0,
        invariance_violations: 0,
        same_class_pairs: 0,
        same_class_witnesses: 0,
        same_class_different_anchor: 0,
        cross_class_pairs: 0,
        cross_class_witnesses: 0,
    };
    let pairings: Vec<[(usize, usize); 3]> = hood
        .partitions
        .par_iter()
        .map(pairing_counts)
        .collect::<Result<_>>()?;
    for (p, counts) in hood.partitions.iter().zip(&pairings) {
        report.anchor_pairing_checked += 1;
        if counts.iter().any(|(x, y)| x != y) {
            report.anchor_pairing_violations += 1;
        }
        let class = hood.classify(p)?;
        let low = counts.iter().map(|c| c.0).min().unwrap_or(0);
        match (class, low) {
            (PartitionClass::E1, 1) => report.both_one_pairs += 1,
            (PartitionClass::E2, 2) => report.both_two_pairs += 1,
            _ => report.anchor_pairing_violations += 1,
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_class = [
        hood.partitions_of_class(PartitionClass::E1)?,
        hood.partitions_of_class(PartitionClass::E2)?,
    ];

    // Random transports keep the class.
    let jobs: Vec<(Partition, AffineMap)> = (0..samples)
        .map(|_| {
            let p = hood.partitions.choose(&mut rng).expect("partitions exist").clone();
            (p, random_affine_map(FOUR, &mut rng))
        })
        .collect();
    let results: Vec<bool> = jobs
        .par_iter()
        .map(|(p, g)| Ok(partition_class(&p.apply(g))? == hood.classify(p)?))
        .collect::<Result<_>>()?;
    report.invariance_samples = results.len();
    report.invariance_violations = results.iter().filter(|ok| !**ok).count();

    // Same-class pairs: a random partition of the class, moved by a random
    // affine map whose translation changes the anchor.
    let mut same_jobs = Vec::new();
    for i in 0..samples {
        let class = &by_class[i % 2];
        let p = class.choose(&mut rng).expect("nonempty").clone();
        let q0 = class.choose(&mut rng).expect("nonempty").clone();
        let mut g = random_affine_map(FOUR, &mut rng);
        while g.apply(hood.anchor) == hood.anchor {
            g = random_affine_map(FOUR, &mut rng);
        }
        same_jobs.push((p, q0.apply(&g)));
    }
    let found: Vec<(bool, bool)> = same_jobs
        .par_iter()
        .map(|(p, q)| {
            let w = partition_transporter(p, q)?;
            Ok((w.is_some_and(|g| p.apply(&g) == *q), p.anchor() != q.anchor()))
        })
        .collect::<Result<_>>()?;
    report.same_class_pairs = found.len();
    report.same_class_witnesses = found.iter().filter(|f| f.0).count();
    report.same_class_different_anchor = found.iter().filter(|f| f.1).count();

    let mut cross_jobs = Vec::new();
    for _ in 0..cross_samples {
        let p = by_class[0].choose(&mut rng).expect("nonempty").clone();
        let v = Point::new_unchecked(rng.gen_range(0..81));
        let q = by_class[1]
            .choose(&mut rng)
            .expect("nonempty")
            .apply(&AffineMap::translation(FOUR, v));
        cross_jobs.push((p, q));
    }
    let crossed: Vec<bool> = cross_jobs
        .par_iter()
        .map(|(p, q)| Ok(partition_transporter(p, q)?.is_some()))
        .collect::<Result<_>>()?;
    report.cross_class_pairs = crossed.len();
    report.cross_class_witnesses = crossed.iter().filter(|w| **w).count();
    Ok(report)
}

/// Partition facts in AG(2,3) and AG(3,3).
#[derive(Clone, Debug, Serialize)]
pub struct LowDimensionPartitions {
    pub dim: Dimension,
    pub maximal_caps: usize,
    /// Maximal caps lying in exactly one partition.
    pub caps_in_unique_partition: usize,
    pub partitions: usize,
    pub affine_orbits: usize,
    #[serde(skip)]
    pub partition_list: Vec<Partition>,
}

/// For n = 2 the complement of a cap and its anchor is tested directly; for
/// n = 3 the 18 remaining points are split by exhaustive search.
pub fn low_dim_partitions(dim: Dimension) -> Result<LowDimensionPartitions> {
    let caps = enumerate_maximal_caps(dim);
    let universe = dim.universe();
    let size = known_max_cap_size(dim);
    let mut all = HashSet::new();
    let mut unique = 0;
    for &c in &caps {
        let found: Vec<Partition> = match dim.n() {
            2 => {
                let a = anchor_point(dim, c)?;
                let rest = universe.without(a) - c;
                if is_cap(dim, rest) && anchor_point(dim, rest)? == a {
                    vec![Partition::new(dim, vec![c, rest])?]
                } else {
                    Vec::new()
                }
            }
            3 => {
                let rest = universe - c;
                let mut out = Vec::new();
                let seed = PointSet::singleton(rest.min().expect("nonempty"));
                let _ = search::for_each_cap(dim, size, seed, rest, |d| {
                    if is_cap(dim, rest - d) {
                        out.push(Partition::new(dim, vec![c, d, rest - d]).expect("valid"));
                    }
                    ControlFlow::Continue(())
                });
                out
            }
            _ => {
                return Err(Error::Precondition(
                    "low-dimension partitions need n = 2 or 3".into(),
                ))
            }
        };
        if found.len() == 1 {
            unique += 1;
        }
        all.extend(found);
    }
    let mut partition_list: Vec<Partition> = all.into_iter().collect();
    partition_list.sort();

    // Orbits under Aff(n,3), via its generators.
    let gens = aff_generators(dim);
    let index: HashMap<&Partition, usize> =
        partition_list.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut seen = vec![false; partition_list.len()];
    let mut orbits = 0;
    for start in 0..partition_list.len() {
        if seen[start] {
            continue;
        }
        orbits += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for g in &gens {
                let j = index[&partition_list[i].apply(g)];
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(LowDimensionPartitions {
        dim,
        maximal_caps: caps.len(),
        caps_in_unique_partition: unique,
        partitions: partition_list.len(),
        affine_orbits: orbits,
        partition_list,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::canonical_cap;

    #[test]
    fn partition_validation() {
        let d2 = Dimension::TWO;
        let low = low_dim_partitions(d2).unwrap();
        let p = &low.partition_list[0];
        assert!(p.is_well_formed());
        assert!(Partition::new(d2, vec![p.blocks()[0]]).is_err());
        assert!(Partition::new(d2, vec![p.blocks()[0], p.blocks()[0]]).is_err());
        assert!(Partition::new(Dimension::ONE, vec![]).is_err());
    }

    #[test]
    fn residual_split_rejects_bad_input() {
        let s = canonical_cap();
        assert!(complete_to_partitions(s, s).is_err());
        let shifted = FOUR.space().translate(s, Point::new_unchecked(1));
        assert!(complete_to_partitions(s, shifted).is_err());
    }

    #[test]
    fn completability_class_counts() {
        assert_eq!(CompletabilityClass::from_count(6), Ok(CompletabilityClass::Six));
        assert!(CompletabilityClass::from_count(3).is_err());
        assert_eq!(CompletabilityClass::Two.count(), 2);
    }
}
