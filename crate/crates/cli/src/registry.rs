//! Expected values checked by `verify-all`, and the phases that compute
//! them. Every expected value lives here and nowhere else.

use std::sync::OnceLock;

use capset_core::affine::{
    group_order, setwise_stabilizer, stabilizer_branching, stabilizer_order_sweep, transporter,
};
use capset_core::caps::{
    anchor0_caps, canonical_cap, cap_sum, completion_count, enumerate_maximal_caps,
    is_complete_cap, max_cap_size,
};
use capset_core::groups::{group_structure, GroupContext};
use capset_core::io::canonical_cap_fixture;
use capset_core::partition::{
    completability, count_partitions_anchor, global_equivalence_classes,
    low_dim_partitions, orbit_classes_on_partitions, sample_transporter_splits,
    verify_anchor_intersection,
};
use capset_core::search::{find_complete_cap, structured_cap_search};
use capset_core::{
    hyperplane_profile, Ambient, CompletabilityClass, Dimension,
    Point, Result, StabilizerMethod,
};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

/// How much `verify-all` runs. Each level includes the ones below it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    /// Low dimensions, the canonical cap, the anchor-0 caps, the stabilizer
    /// and the partition census of one cap.
    Quick,
    /// Adds the cross-anchor intersection check, orbit structure, the count
    /// of all anchor-0 partitions, the two global classes and the group
    /// structure of the stabilizer.
    Full,
    /// Adds the exhaustive proof that no 21-cap exists and the stabilizer
    /// count by sweeping all of GL(4,3).
    Deep,
}

/// One named check with its expected value.
#[derive(Clone, Debug, Serialize)]
pub struct Expectation {
    pub key: &'static str,
    pub phase: &'static str,
    pub depth: Depth,
    pub expected: Value,
}

/// Values shared between phases, computed on first use.
#[derive(Default)]
pub struct Shared {
    ctx: OnceLock<GroupContext>,
}

impl Shared {
    pub fn ctx(&self) -> Result<&GroupContext> {
        if let Some(c) = self.ctx.get() {
            return Ok(c);
        }
        let c = GroupContext::new(canonical_cap())?;
        Ok(self.ctx.get_or_init(|| c))
    }
}

pub type Computed = Vec<(&'static str, Value)>;

pub struct Phase {
    pub name: &'static str,
    pub depth: Depth,
    pub run: fn(&Shared, u64) -> Result<Computed>,
}

pub const SAMPLED_SAME_CLASS: usize = 100;
pub const SAMPLED_CROSS_CLASS: usize = 10;
pub const SPLIT_PAIRS_PER_CLASS: usize = 12;

pub fn phases() -> Vec<Phase> {
    use Depth::*;
    vec![
        Phase { name: "low_dimensions", depth: Quick, run: low_dimensions },
        Phase { name: "twenty_cap", depth: Quick, run: twenty_cap },
        Phase { name: "canonical_cap", depth: Quick, run: canonical },
        Phase { name: "anchor0_caps", depth: Quick, run: anchor0 },
        Phase { name: "stabilizer", depth: Quick, run: stabilizer },
        Phase { name: "partition_census", depth: Quick, run: partition_census },
        Phase { name: "stabilizer_cross_check", depth: Full, run: stabilizer_cross_check },
        Phase { name: "anchor_intersection", depth: Full, run: anchor_intersection },
        Phase { name: "partition_orbits", depth: Full, run: partition_orbits },
        Phase { name: "anchor0_partitions", depth: Full, run: anchor0_partitions },
        Phase { name: "global_classes", depth: Full, run: global_classes },
        Phase { name: "group_structure", depth: Full, run: groups },
        Phase { name: "stabilizer_sweep", depth: Deep, run: stabilizer_sweep },
        Phase { name: "no_21_cap", depth: Deep, run: no_21_cap },
    ]
}

pub fn registry() -> Vec<Expectation> {
    use Depth::*;
    let e = |key, phase, depth, expected| Expectation { key, phase, depth, expected };
    vec![
        e("max_cap_size_dim1", "low_dimensions", Quick, json!(2)),
        e("max_cap_size_dim2", "low_dimensions", Quick, json!(4)),
        e("max_cap_size_dim3", "low_dimensions", Quick, json!(9)),
        e("lines_dim2", "low_dimensions", Quick, json!(12)),
        e("maximal_caps_dim2", "low_dimensions", Quick, json!(54)),
        e("partitions_dim2", "low_dimensions", Quick, json!(27)),
        e("partition_orbits_dim2", "low_dimensions", Quick, json!(1)),
        e("maximal_caps_dim3", "low_dimensions", Quick, json!(2106)),
        e("maximal_caps_dim3_by_orbit_stabilizer", "low_dimensions", Quick, json!(2106)),
        e("dim3_caps_not_affinely_equivalent", "low_dimensions", Quick, json!(0)),
        e("dim3_caps_with_nonzero_sum", "low_dimensions", Quick, json!(0)),
        e("dim3_bad_hyperplane_profiles", "low_dimensions", Quick, json!(0)),
        e("dim3_external_points_not_completing_two_lines", "low_dimensions", Quick, json!(0)),
        e("partitions_dim3", "low_dimensions", Quick, json!(702)),
        e("dim3_caps_in_unique_partition", "low_dimensions", Quick, json!(2106)),
        e("partition_orbits_dim3", "low_dimensions", Quick, json!(1)),
        e("dim3_complete_8_cap_exists", "low_dimensions", Quick, json!(true)),
        e("dim4_complete_20_cap_found", "twenty_cap", Quick, json!(true)),
        e("canonical_cap_matches_fixture", "canonical_cap", Quick, json!(true)),
        e("canonical_cap_anchor", "canonical_cap", Quick, json!(0)),
        e("anchor0_cap_count", "anchor0_caps", Quick, json!(8424)),
        e("stabilizer_order", "stabilizer", Quick, json!(2880)),
        e("stabilizer_determinant_split", "stabilizer", Quick, json!([1440, 1440])),
        e("gl4_order", "stabilizer", Quick, json!(24_261_120u64)),
        e("orbit_stabilizer_product", "stabilizer", Quick, json!(24_261_120u64)),
        e("disjoint_caps", "partition_census", Quick, json!(198)),
        e("partitions_through_cap", "partition_census", Quick, json!(216)),
        e("completability_census", "partition_census", Quick, json!({"one": 36, "two": 90, "six": 72})),
        e("disjoint_caps_outside_partitions", "partition_census", Quick, json!(0)),
        e("partition_classes", "partition_census", Quick, json!({"e1": 36, "e2": 180})),
        e("partitions_without_two_six_blocks", "partition_census", Quick, json!(0)),
        e("six_profiles", "partition_census", Quick, json!({"(1,5)": 72})),
        e("stabilizer_basis_choices", "stabilizer_cross_check", Full, json!([[20], [18], [4], [2]])),
        e("stabilizer_closed", "stabilizer_cross_check", Full, json!(true)),
        e("affine_stabilizer_order", "stabilizer_cross_check", Full, json!(2880)),
        e("cross_anchor_caps_tested", "anchor_intersection", Full, json!(673_920)),
        e("cross_anchor_disjoint_pairs", "anchor_intersection", Full, json!(0)),
        e("stabilizer_orbits_on_partitions", "partition_orbits", Full, json!([36, 180])),
        e("one_two_completability_asymmetries", "partition_orbits", Full, json!(0)),
        e(
            "transporter_split_sample",
            "partition_orbits",
            Full,
            json!({"sampled_pairs": 2 * SPLIT_PAIRS_PER_CLASS, "balanced": 2 * SPLIT_PAIRS_PER_CLASS}),
        ),
        e("anchor0_partitions", "anchor0_partitions", Full, json!(454_896)),
        e("anchor0_partitions_by_double_count", "anchor0_partitions", Full, json!(454_896)),
        e("anchor0_partitions_e1", "anchor0_partitions", Full, json!(75_816)),
        e("anchor0_partitions_e2", "anchor0_partitions", Full, json!(379_080)),
        e("anchor_pairing_checked", "global_classes", Full, json!(216)),
        e("anchor_pairing_violations", "global_classes", Full, json!(0)),
        e("class_invariance", "global_classes", Full, json!({"samples": SAMPLED_SAME_CLASS, "violations": 0})),
        e(
            "same_class_transporters",
            "global_classes",
            Full,
            json!({"pairs": SAMPLED_SAME_CLASS, "witnesses": SAMPLED_SAME_CLASS}),
        ),
        e(
            "cross_class_transporters",
            "global_classes",
            Full,
            json!({"pairs": SAMPLED_CROSS_CLASS, "witnesses": 0}),
        ),
        e(
            "e1_pair_stabilizer",
            "group_structure",
            Full,
            json!({"order": 80, "layers": [
                {"name": "blockwise", "order": 40, "determinant_split": [40, 0]},
                {"name": "swap_six_blocks", "order": 40, "determinant_split": [0, 40]}]}),
        ),
        e(
            "e2_pair_stabilizer",
            "group_structure",
            Full,
            json!({"order": 32, "layers": [
                {"name": "blockwise", "order": 8, "determinant_split": [8, 0]},
                {"name": "swap_six_blocks", "order": 8, "determinant_split": [8, 0]},
                {"name": "to_other_partition", "order": 16, "determinant_split": [0, 16]}]}),
        ),
        e("six_pair_stabilizer", "group_structure", Full, json!({"order": 40, "equals_e1_blockwise": true})),
        e("e1_blockwise_abelian", "group_structure", Full, json!(false)),
        e("e1_blockwise_cyclic20_subgroups", "group_structure", Full, json!(1)),
        e("e1_blockwise_isomorphic_to", "group_structure", Full, json!(["Z20:9Z2"])),
        e("e2_blockwise_element_orders", "group_structure", Full, json!({"1": 1, "2": 3, "4": 4})),
        e("e2_blockwise_isomorphic_to", "group_structure", Full, json!(["Z4xZ2"])),
        e("e2_partition_fixing_order", "group_structure", Full, json!(16)),
        e("e2_partition_fixing_isomorphic_to", "group_structure", Full, json!(["Z4:3Z4"])),
        e(
            "e2_pair_isomorphic_to",
            "group_structure",
            Full,
            json!(["(Z8xZ2):Z2 [a->(3,1), b->(0,1)]", "(Z8xZ2):Z2 [a->(7,1), b->(0,1)]"]),
        ),
        e("order5_elements", "group_structure", Full, json!(144)),
        e("order5_subgroups", "group_structure", Full, json!(36)),
        e("order5_fixed_e1_partitions", "group_structure", Full, json!({"1": 36})),
        e("order5_generated_order", "group_structure", Full, json!(360)),
        e("order5_generated_is_simple", "group_structure", Full, json!(true)),
        e("order5_generating_triple_exists", "group_structure", Full, json!(true)),
        e("g1_order", "group_structure", Full, json!(1440)),
        e("g1_index", "group_structure", Full, json!(2)),
        e("g1_e1_orbits", "group_structure", Full, json!([36])),
        e("g1_e2_orbits", "group_structure", Full, json!([90, 90])),
        e("g1_two_cap_occurrences", "group_structure", Full, json!([{"1": 90}, {"1": 90}])),
        e("g1_coset_swaps_e2_orbits", "group_structure", Full, json!(true)),
        e("stabilizer_order_by_sweep", "stabilizer_sweep", Deep, json!(2880)),
        e("cap_of_size_21_exists", "no_21_cap", Deep, json!(false)),
        e("max_cap_size_dim4", "no_21_cap", Deep, json!(20)),
    ]
}

fn low_dimensions(_: &Shared, _: u64) -> Result<Computed> {
    let d2 = Dimension::TWO;
    let d3 = Dimension::THREE;
    let mut out: Computed = Vec::new();
    for n in 1..=3 {
        let key = ["max_cap_size_dim1", "max_cap_size_dim2", "max_cap_size_dim3"][n as usize - 1];
        out.push((key, json!(max_cap_size(Dimension::new(n)?))));
    }
    out.push(("lines_dim2", json!(d2.space().lines().len())));
    let low2 = low_dim_partitions(d2)?;
    out.push(("maximal_caps_dim2", json!(low2.maximal_caps)));
    out.push(("partitions_dim2", json!(low2.partitions)));
    out.push(("partition_orbits_dim2", json!(low2.affine_orbits)));

    let caps = enumerate_maximal_caps(d3);
    out.push(("maximal_caps_dim3", json!(caps.len())));
    let stab = setwise_stabilizer(d3, caps[0], Ambient::Affine, StabilizerMethod::BasisImage)?;
    out.push((
        "maximal_caps_dim3_by_orbit_stabilizer",
        json!(group_order(d3, Ambient::Affine) / stab.order() as u64),
    ));
    let mut inequivalent = 0;
    for &c in &caps {
        if transporter(d3, caps[0], c, Ambient::Affine)?.is_none() {
            inequivalent += 1;
        }
    }
    out.push(("dim3_caps_not_affinely_equivalent", json!(inequivalent)));
    let nonzero = caps.iter().filter(|&&c| cap_sum(d3, c) != Point::ORIGIN).count();
    out.push(("dim3_caps_with_nonzero_sum", json!(nonzero)));
    let families = d3.space().hyperplane_families();
    let bad_profiles = caps
        .iter()
        .flat_map(|&c| families.iter().map(move |f| hyperplane_profile(c, f)))
        .filter(|p| *p != [4, 4, 1] && *p != [3, 3, 3])
        .count();
    out.push(("dim3_bad_hyperplane_profiles", json!(bad_profiles)));
    let mut not_two = 0;
    for &c in &caps {
        for p in d3.universe() - c {
            if completion_count(d3, c, p)? != 2 {
                not_two += 1;
            }
        }
    }
    out.push(("dim3_external_points_not_completing_two_lines", json!(not_two)));
    let low3 = low_dim_partitions(d3)?;
    out.push(("partitions_dim3", json!(low3.partitions)));
    out.push(("dim3_caps_in_unique_partition", json!(low3.caps_in_unique_partition)));
    out.push(("partition_orbits_dim3", json!(low3.affine_orbits)));
    let eight = find_complete_cap(d3, 8).map(|c| is_complete_cap(d3, c)).transpose()?;
    out.push(("dim3_complete_8_cap_exists", json!(eight == Some(true))));
    Ok(out)
}

fn twenty_cap(_: &Shared, _: u64) -> Result<Computed> {
    let found = structured_cap_search(20).found;
    let ok = match found {
        Some(c) => c.len() == 20 && is_complete_cap(Dimension::FOUR, c)?,
        None => false,
    };
    Ok(vec![("dim4_complete_20_cap_found", json!(ok))])
}

fn canonical(_: &Shared, _: u64) -> Result<Computed> {
    let fixture = canonical_cap_fixture()?;
    let s = canonical_cap();
    Ok(vec![
        ("canonical_cap_matches_fixture", json!(fixture.points == s)),
        ("canonical_cap_anchor", json!(capset_core::caps::anchor_point(Dimension::FOUR, s)?)),
    ])
}

fn anchor0(_: &Shared, _: u64) -> Result<Computed> {
    Ok(vec![("anchor0_cap_count", json!(anchor0_caps().len()))])
}

fn stabilizer(shared: &Shared, _: u64) -> Result<Computed> {
    let g = &shared.ctx()?.stabilizer;
    let gl = group_order(Dimension::FOUR, Ambient::Linear);
    Ok(vec![
        ("stabilizer_order", json!(g.order())),
        ("stabilizer_determinant_split", json!(g.determinant_split())),
        ("gl4_order", json!(gl)),
        ("orbit_stabilizer_product", json!(anchor0_caps().len() as u64 * g.order() as u64)),
    ])
}

fn partition_census(shared: &Shared, _: u64) -> Result<Computed> {
    let hood = &shared.ctx()?.hood;
    let c = &hood.census;
    let uncovered = c
        .classes
        .iter()
        .filter(|(d, _)| !hood.partitions.iter().any(|p| p.contains_block(*d)))
        .count();
    let [e1, e2] = hood.class_census()?;
    let mut wrong_shape = 0;
    for p in &hood.partitions {
        let (a, sixes) = hood.roles(p)?;
        let ok = hood.class_of_cap(a)? != CompletabilityClass::Six
            && sixes.iter().all(|&b| hood.class_of_cap(b).ok() == Some(CompletabilityClass::Six));
        wrong_shape += usize::from(!ok);
    }
    let mut profiles = std::collections::BTreeMap::new();
    for &(cap, k) in &c.classes {
        if k == CompletabilityClass::Six {
            let (x, y) = hood.six_profile(cap)?;
            *profiles.entry(format!("({x},{y})")).or_insert(0usize) += 1;
        }
    }
    Ok(vec![
        ("disjoint_caps", json!(c.total())),
        ("partitions_through_cap", json!(hood.partitions.len())),
        ("completability_census", json!({"one": c.one, "two": c.two, "six": c.six})),
        ("disjoint_caps_outside_partitions", json!(uncovered)),
        ("partition_classes", json!({"e1": e1, "e2": e2})),
        ("partitions_without_two_six_blocks", json!(wrong_shape)),
        ("six_profiles", json!(profiles)),
    ])
}

fn stabilizer_cross_check(shared: &Shared, _: u64) -> Result<Computed> {
    let s = canonical_cap();
    let g = &shared.ctx()?.stabilizer;
    let branching = stabilizer_branching(Dimension::FOUR, s)?;
    let closed = g.verify_closed().is_ok();
    let affine = setwise_stabilizer(Dimension::FOUR, s, Ambient::Affine, StabilizerMethod::BasisImage)?;
    Ok(vec![
        ("stabilizer_basis_choices", json!(branching.choices_per_level)),
        ("stabilizer_closed", json!(closed)),
        ("affine_stabilizer_order", json!(affine.order())),
    ])
}

fn anchor_intersection(_: &Shared, _: u64) -> Result<Computed> {
    let r = verify_anchor_intersection(canonical_cap())?;
    Ok(vec![
        ("cross_anchor_caps_tested", json!(r.caps_tested)),
        ("cross_anchor_disjoint_pairs", json!(r.disjoint_cross_anchor)),
    ])
}

fn partition_orbits(shared: &Shared, seed: u64) -> Result<Computed> {
    let ctx = shared.ctx()?;
    let hood = &ctx.hood;
    let orbits = orbit_classes_on_partitions(&ctx.stabilizer, &hood.partitions);
    let mut asymmetric = 0;
    for &(c, k) in &hood.census.classes {
        if k != CompletabilityClass::Six && completability(c, hood.cap)? != k {
            asymmetric += 1;
        }
    }
    let split = sample_transporter_splits(hood, &ctx.stabilizer, seed, SPLIT_PAIRS_PER_CLASS)?;
    Ok(vec![
        ("stabilizer_orbits_on_partitions", json!(orbits.sizes)),
        ("one_two_completability_asymmetries", json!(asymmetric)),
        ("transporter_split_sample", json!(split)),
    ])
}

fn anchor0_partitions(shared: &Shared, _: u64) -> Result<Computed> {
    let per_cap = shared.ctx()?.hood.partitions.len() as u64;
    let r = count_partitions_anchor(Point::ORIGIN, per_cap);
    Ok(vec![
        ("anchor0_partitions", json!(r.enumerated)),
        ("anchor0_partitions_by_double_count", json!(r.double_count)),
        ("anchor0_partitions_e1", json!(r.e1)),
        ("anchor0_partitions_e2", json!(r.e2)),
    ])
}

fn global_classes(_: &Shared, seed: u64) -> Result<Computed> {
    let r = global_equivalence_classes(canonical_cap(), seed, SAMPLED_SAME_CLASS, SAMPLED_CROSS_CLASS)?;
    Ok(vec![
        ("anchor_pairing_checked", json!(r.anchor_pairing_checked)),
        ("anchor_pairing_violations", json!(r.anchor_pairing_violations)),
        (
            "class_invariance",
            json!({"samples": r.invariance_samples, "violations": r.invariance_violations}),
        ),
        (
            "same_class_transporters",
            json!({"pairs": r.same_class_pairs, "witnesses": r.same_class_witnesses}),
        ),
        (
            "cross_class_transporters",
            json!({"pairs": r.cross_class_pairs, "witnesses": r.cross_class_witnesses}),
        ),
    ])
}

fn groups(shared: &Shared, _: u64) -> Result<Computed> {
    let r = group_structure(shared.ctx()?)?;
    let pair = |p: &capset_core::groups::PairStabilizers| json!({"order": p.order, "layers": p.layers});
    Ok(vec![
        ("e1_pair_stabilizer", pair(&r.e1_pair)),
        ("e2_pair_stabilizer", pair(&r.e2_pair)),
        (
            "six_pair_stabilizer",
            json!({"order": r.six_pair.order, "equals_e1_blockwise": r.six_pair.equals_e1_blockwise}),
        ),
        ("e1_blockwise_abelian", json!(r.e1_blockwise.fingerprint.abelian)),
        ("e1_blockwise_cyclic20_subgroups", json!(r.e1_blockwise_cyclic20_subgroups)),
        ("e1_blockwise_isomorphic_to", json!(r.e1_blockwise.matches())),
        ("e2_blockwise_element_orders", json!(r.e2_blockwise.fingerprint.element_order_histogram)),
        ("e2_blockwise_isomorphic_to", json!(r.e2_blockwise.matches())),
        ("e2_partition_fixing_order", json!(r.e2_partition_fixing.fingerprint.order)),
        ("e2_partition_fixing_isomorphic_to", json!(r.e2_partition_fixing.matches())),
        ("e2_pair_isomorphic_to", json!(r.e2_pair_isomorphism.matches())),
        ("order5_elements", json!(r.order5.elements)),
        ("order5_subgroups", json!(r.order5.subgroups)),
        ("order5_fixed_e1_partitions", json!(r.order5.fixed_e1_histogram)),
        ("order5_generated_order", json!(r.order5.generated_order)),
        ("order5_generated_is_simple", json!(r.order5.generated_is_simple)),
        ("order5_generating_triple_exists", json!(r.order5.generating_triple.is_some())),
        ("g1_order", json!(r.g1.order)),
        ("g1_index", json!(r.g1.index)),
        ("g1_e1_orbits", json!(r.g1.e1_orbit_sizes)),
        ("g1_e2_orbits", json!(r.g1.e2_orbit_sizes)),
        ("g1_two_cap_occurrences", json!(r.g1.two_cap_occurrences)),
        ("g1_coset_swaps_e2_orbits", json!(r.g1.coset_swaps_e2_orbits)),
    ])
}

fn stabilizer_sweep(_: &Shared, _: u64) -> Result<Computed> {
    let order = stabilizer_order_sweep(Dimension::FOUR, canonical_cap(), Ambient::Linear)?;
    Ok(vec![("stabilizer_order_by_sweep", json!(order))])
}

fn no_21_cap(_: &Shared, _: u64) -> Result<Computed> {
    let r = structured_cap_search(21);
    Ok(vec![
        ("cap_of_size_21_exists", json!(r.found.is_some())),
        ("max_cap_size_dim4", json!(max_cap_size(Dimension::FOUR))),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn registry_keys_are_unique_and_phases_exist() {
        let reg = registry();
        let keys: HashSet<_> = reg.iter().map(|e| e.key).collect();
        assert_eq!(keys.len(), reg.len());
        let phases = phases();
        for e in &reg {
            let p = phases.iter().find(|p| p.name == e.phase).expect("phase exists");
            assert_eq!(p.depth, e.depth, "{}", e.key);
        }
    }

    #[test]
    fn quick_phases_produce_exactly_their_keys() {
        let shared = Shared::default();
        let reg = registry();
        for phase in phases().iter().filter(|p| p.name == "low_dimensions" || p.name == "stabilizer") {
            let got: Vec<&str> = (phase.run)(&shared, 1).unwrap().into_iter().map(|(k, _)| k).collect();
            let want: Vec<&str> = reg.iter().filter(|e| e.phase == phase.name).map(|e| e.key).collect();
            assert_eq!(got, want);
        }
    }
}
