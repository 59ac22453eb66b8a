//! Subgroups of the stabilizer of a maximal cap: stabilizers of cap pairs
//! and partitions, their isomorphism types, the elements of order 5 and the
//! determinant-1 subgroup.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::affine::{setwise_stabilizer, AffineMap, Ambient, MatrixGroup, StabilizerMethod};
use crate::error::{Error, Result};
use crate::finite_group::{
    cyclic, direct_product, find_isomorphism, matrix_group_fingerprint, metacyclic,
    table_elements, z8z2_by_z2_extensions, FiniteGroup, GroupFingerprint, IsomorphismWitness,
};
use crate::geometry::Dimension;
use crate::partition::{
    orbit_classes_on_partitions, CapNeighborhood, CompletabilityClass, Partition, PartitionClass,
};
use crate::pointset::PointSet;

/// The stabilizer G of a maximal cap together with the partitions through
/// it and one representative partition of each class.
pub struct GroupContext {
    pub hood: CapNeighborhood,
    pub stabilizer: MatrixGroup,
    /// Least E1 partition through the cap.
    pub e1_partition: Partition,
    /// Least E2 partition through the cap.
    pub e2_partition: Partition,
}

impl GroupContext {
    /// Builds the context for a maximal cap of AG(4,3) with anchor 0 (so its
    /// stabilizer lies in GL(4,3)).
    pub fn new(s: PointSet) -> Result<Self> {
        let hood = CapNeighborhood::new(s)?;
        if hood.anchor.index() != 0 {
            return Err(Error::Precondition("group analysis expects a cap with anchor 0".into()));
        }
        let stabilizer = setwise_stabilizer(Dimension::FOUR, s, Ambient::Linear, StabilizerMethod::BasisImage)?;
        let e1_partition = hood.partitions_of_class(PartitionClass::E1)?.remove(0);
        let e2_partition = hood.partitions_of_class(PartitionClass::E2)?.remove(0);
        Ok(GroupContext {
            hood,
            stabilizer,
            e1_partition,
            e2_partition,
        })
    }

    /// The One-or-Two block of a partition through the base cap.
    pub fn partner(&self, p: &Partition) -> Result<PointSet> {
        Ok(self.hood.roles(p)?.0)
    }
}

/// Elements of `g` fixing every block of `p`.
pub fn blockwise_partition_stabilizer(p: &Partition, g: &MatrixGroup) -> MatrixGroup {
    g.subgroup_where(|x| p.blocks().iter().all(|&b| x.apply_set(b) == b))
}

/// Elements of `g` permuting the blocks of `p`.
pub fn partition_stabilizer(p: &Partition, g: &MatrixGroup) -> MatrixGroup {
    g.subgroup_where(|x| p.apply(x) == *p)
}

/// Order and determinant split of one layer of a stabilizer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Layer {
    pub name: String,
    pub order: usize,
    pub determinant_split: [usize; 2],
}

fn layer(name: &str, elements: &[AffineMap]) -> Layer {
    let ones = elements.iter().filter(|g| g.determinant() == 1).count();
    Layer {
        name: name.to_string(),
        order: elements.len(),
        determinant_split: [ones, elements.len() - ones],
    }
}

/// Stabilizer of the base cap S and a disjoint cap C, split into layers.
#[derive(Clone, Debug, Serialize)]
pub struct PairStabilizers {
    pub class: CompletabilityClass,
    pub order: usize,
    pub determinant_split: [usize; 2],
    /// For a One cap: blockwise stabilizer of the partition, then the
    /// elements swapping its two Six blocks. For a Two cap: blockwise, the
    /// Six swaps within the partition, then the elements sending it to the
    /// other partition through S and C. For a Six cap: the blockwise
    /// stabilizer of its E1 partition.
    pub layers: Vec<Layer>,
    /// For a Six cap: whether the pair stabilizer equals that blockwise
    /// stabilizer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equals_e1_blockwise: Option<bool>,
}

pub fn pairwise_stabilizers(ctx: &GroupContext, c: PointSet) -> Result<PairStabilizers> {
    let class = ctx.hood.class_of_cap(c)?;
    let pair = ctx.stabilizer.subgroup_where(|g| g.apply_set(c) == c);
    pair.verify_closed()?;
    let through: Vec<&Partition> = ctx.hood.partitions.iter().filter(|p| p.contains_block(c)).collect();
    let mut layers = Vec::new();
    let mut equals = None;
    match class {
        CompletabilityClass::One => {
            let p = through[0];
            let (block, rest): (Vec<AffineMap>, Vec<AffineMap>) = pair
                .iter()
                .partition(|g| p.blocks().iter().all(|&b| g.apply_set(b) == b));
            layers.push(layer("blockwise", &block));
            layers.push(layer("swap_six_blocks", &rest));
        }
        CompletabilityClass::Two => {
            let p = through[0];
            let fixing: Vec<AffineMap> = pair.iter().copied().filter(|g| p.apply(g) == *p).collect();
            let (block, swap): (Vec<AffineMap>, Vec<AffineMap>) = fixing
                .iter()
                .partition(|g| p.blocks().iter().all(|&b| g.apply_set(b) == b));
            let other: Vec<AffineMap> = pair.iter().copied().filter(|g| p.apply(g) != *p).collect();
            layers.push(layer("blockwise", &block));
            layers.push(layer("swap_six_blocks", &swap));
            layers.push(layer("to_other_partition", &other));
        }
        CompletabilityClass::Six => {
            let e1: Vec<&&Partition> = through
                .iter()
                .filter(|p| ctx.hood.classify(p).is_ok_and(|k| k == PartitionClass::E1))
                .collect();
            if e1.len() != 1 {
                return Err(Error::InvariantViolation(format!(
                    "a Six cap lies in {} E1 partitions",
                    e1.len()
                )));
            }
            let block = blockwise_partition_stabilizer(e1[0], &ctx.stabilizer);
            layers.push(layer("e1_blockwise", block.elements()));
            equals = Some(block == pair);
        }
    }
    Ok(PairStabilizers {
        class,
        order: pair.order(),
        determinant_split: pair.determinant_split(),
        layers,
        equals_e1_blockwise: equals,
    })
}

/// Result of comparing a group with a family of reference groups.
#[derive(Clone, Debug, Serialize)]
pub struct IsomorphismReport {
    pub group: String,
    pub fingerprint: GroupFingerprint,
    /// Reference name → witness (None when refuted).
    pub candidates: BTreeMap<String, Option<IsomorphismWitness>>,
}

impl IsomorphismReport {
    pub fn matches(&self) -> Vec<&str> {
        self.candidates
            .iter()
            .filter(|(_, w)| w.is_some())
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

pub fn compare_with_references(name: &str, g: &MatrixGroup, refs: &[FiniteGroup]) -> Result<IsomorphismReport> {
    let table = FiniteGroup::from_matrix_group(name, g)?;
    let fingerprint = matrix_group_fingerprint(g)?;
    let mut candidates = BTreeMap::new();
    for r in refs {
        let witness = find_isomorphism(&table, r);
        if witness.is_some() && !fingerprint.same_abstract_invariants(&r.fingerprint()) {
            return Err(Error::InvariantViolation("isomorphic groups with different fingerprints".into()));
        }
        candidates.insert(r.name().to_string(), witness);
    }
    Ok(IsomorphismReport {
        group: name.to_string(),
        fingerprint,
        candidates,
    })
}

/// Facts about the elements of order 5 of the cap stabilizer.
#[derive(Clone, Debug, Serialize)]
pub struct Order5Report {
    pub elements: usize,
    pub subgroups: usize,
    /// For each Z5 subgroup, the number of E1 partitions it fixes, as a
    /// histogram.
    pub fixed_e1_histogram: BTreeMap<usize, usize>,
    pub generated_order: usize,
    pub generated_is_simple: bool,
    /// Three elements of order 5 that already generate the same subgroup.
    pub generating_triple: Option<[String; 3]>,
}

pub fn order5_analysis(ctx: &GroupContext) -> Result<Order5Report> {
    let g = &ctx.stabilizer;
    let fives: Vec<AffineMap> = g.iter().copied().filter(|x| x.order() == 5).collect();
    let mut subgroups: BTreeSet<Vec<AffineMap>> = BTreeSet::new();
    for &x in &fives {
        let mut powers: Vec<AffineMap> = std::iter::successors(Some(x), |y| Some(y.compose(&x)))
            .take(5)
            .collect();
        powers.sort();
        subgroups.insert(powers);
    }
    let e1 = ctx.hood.partitions_of_class(PartitionClass::E1)?;
    let mut fixed_e1_histogram = BTreeMap::new();
    for sub in &subgroups {
        let fixed = e1.iter().filter(|p| sub.iter().all(|x| p.apply(x) == **p)).count();
        *fixed_e1_histogram.entry(fixed).or_insert(0) += 1;
    }

    let generated = MatrixGroup::generated_by(Dimension::FOUR, &fives)?;
    generated.verify_closed()?;
    let table = FiniteGroup::from_matrix_group("order-5 closure", &generated)?;
    let generated_is_simple = table.is_simple();

    // Table indices of the order-5 elements.
    let elements = table_elements(&generated);
    let five_idx: Vec<usize> = (0..table.order()).filter(|&i| table.element_order(i) == 5).collect();
    let triple = five_idx.iter().enumerate().find_map(|(ia, &a)| {
        five_idx[ia + 1..].par_iter().enumerate().find_map_first(|(ib, &b)| {
            five_idx[ia + ib + 2..]
                .iter()
                .find(|&&c| table.generate(&[a, b, c]).len() == table.order())
                .map(|&c| [a, b, c])
        })
    });
    Ok(Order5Report {
        elements: fives.len(),
        subgroups: subgroups.len(),
        fixed_e1_histogram,
        generated_order: generated.order(),
        generated_is_simple,
        generating_triple: triple.map(|t| t.map(|i| elements[i].to_trit_string())),
    })
}

/// The determinant-1 subgroup G1 of the cap stabilizer and its orbits.
#[derive(Clone, Debug, Serialize)]
pub struct G1Report {
    pub order: usize,
    pub index: usize,
    pub e1_orbit_sizes: Vec<usize>,
    pub e2_orbit_sizes: Vec<usize>,
    /// For each E2 orbit, how many times each Two cap occurs as a block
    /// (as a histogram count → caps).
    pub two_cap_occurrences: Vec<BTreeMap<usize, usize>>,
    /// Whether an element of determinant 2 exchanges the two E2 orbits.
    pub coset_swaps_e2_orbits: bool,
}

pub fn g1_structure(ctx: &GroupContext) -> Result<G1Report> {
    let g = &ctx.stabilizer;
    let g1 = g.subgroup_where(|x| x.determinant() == 1);
    g1.verify_closed()?;
    let e1 = ctx.hood.partitions_of_class(PartitionClass::E1)?;
    let e2 = ctx.hood.partitions_of_class(PartitionClass::E2)?;
    let e1_orbits = orbit_classes_on_partitions(&g1, &e1);
    let e2_orbits = orbit_classes_on_partitions(&g1, &e2);
    let two_caps: Vec<PointSet> = ctx
        .hood
        .census
        .classes
        .iter()
        .filter(|(_, k)| *k == CompletabilityClass::Two)
        .map(|&(c, _)| c)
        .collect();
    let two_cap_occurrences = e2_orbits
        .orbits
        .iter()
        .map(|orbit| {
            let mut hist = BTreeMap::new();
            for &c in &two_caps {
                let n = orbit.iter().filter(|p| p.contains_block(c)).count();
                *hist.entry(n).or_insert(0) += 1;
            }
            hist
        })
        .collect();
    let coset_swaps_e2_orbits = match (
        g.iter().find(|x| x.determinant() == 2),
        e2_orbits.orbits.as_slice(),
    ) {
        (Some(t), [a, b]) => {
            let image: HashSet<Partition> = a.iter().map(|p| p.apply(t)).collect();
            image == b.iter().cloned().collect()
        }
        _ => false,
    };
    Ok(G1Report {
        order: g1.order(),
        index: g.order() / g1.order(),
        e1_orbit_sizes: e1_orbits.sizes,
        e2_orbit_sizes: e2_orbits.sizes,
        two_cap_occurrences,
        coset_swaps_e2_orbits,
    })
}

/// Everything the group analysis reports about a cap stabilizer.
#[derive(Clone, Debug, Serialize)]
pub struct GroupStructureReport {
    pub stabilizer_order: usize,
    pub stabilizer_determinant_split: [usize; 2],
    pub e1_pair: PairStabilizers,
    pub e2_pair: PairStabilizers,
    pub six_pair: PairStabilizers,
    pub e1_blockwise: IsomorphismReport,
    pub e1_blockwise_cyclic20_subgroups: usize,
    pub e2_blockwise: IsomorphismReport,
    pub e2_partition_fixing: IsomorphismReport,
    pub e2_pair_isomorphism: IsomorphismReport,
    pub order5: Order5Report,
    pub g1: G1Report,
}

/// Reference groups for the blockwise stabilizer of an E1 partition: the
/// semidirect products Z20 ⋊ Z2 for every involutory action.
pub fn z20_by_z2_references() -> Vec<FiniteGroup> {
    [1usize, 9, 11, 19]
        .iter()
        .map(|&r| metacyclic(20, 2, r).expect("r^2 = 1 mod 20"))
        .collect()
}

pub fn group_structure(ctx: &GroupContext) -> Result<GroupStructureReport> {
    let g = &ctx.stabilizer;
    let pi1 = &ctx.e1_partition;
    let pi2 = &ctx.e2_partition;
    let s1 = ctx.partner(pi1)?;
    let s2 = ctx.partner(pi2)?;
    let (_, [s6, _]) = ctx.hood.roles(pi1)?;

    let h = blockwise_partition_stabilizer(pi1, g);
    let k = blockwise_partition_stabilizer(pi2, g);
    let fixing16 = partition_stabilizer(pi2, g);
    let pair32 = g.subgroup_where(|x| x.apply_set(s2) == s2);
    for sub in [&h, &k, &fixing16, &pair32] {
        sub.verify_closed()?;
    }

    let h_table = FiniteGroup::from_matrix_group("H", &h)?;
    let e1_blockwise = compare_with_references("H", &h, &z20_by_z2_references())?;
    let e2_blockwise = compare_with_references(
        "K",
        &k,
        &[direct_product(&cyclic(4), &cyclic(2)), cyclic(8)],
    )?;
    let e2_partition_fixing = compare_with_references(
        "partition_fixing",
        &fixing16,
        &[metacyclic(4, 4, 3)?, direct_product(&cyclic(4), &cyclic(4))],
    )?;
    let order32_refs: Vec<FiniteGroup> = z8z2_by_z2_extensions().into_iter().map(|(_, g)| g).collect();
    let e2_pair_isomorphism = compare_with_references("pair_stabilizer", &pair32, &order32_refs)?;

    Ok(GroupStructureReport {
        stabilizer_order: g.order(),
        stabilizer_determinant_split: g.determinant_split(),
        e1_pair: pairwise_stabilizers(ctx, s1)?,
        e2_pair: pairwise_stabilizers(ctx, s2)?,
        six_pair: pairwise_stabilizers(ctx, s6)?,
        e1_blockwise,
        e1_blockwise_cyclic20_subgroups: h_table.cyclic_subgroup_count(20),
        e2_blockwise,
        e2_partition_fixing,
        e2_pair_isomorphism,
        order5: order5_analysis(ctx)?,
        g1: g1_structure(ctx)?,
    })
}
