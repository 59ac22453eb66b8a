//! The ten acceptance criteria, each at its stated tolerance. Prints one
//! PASS/FAIL line per criterion and fails if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use capset_core::affine::{group_order, setwise_stabilizer, stabilizer_order_sweep, transporter};
use capset_core::caps::{
    canonical_cap, cap_sum, completion_count, enumerate_maximal_caps,
    is_complete_cap, max_cap_size,
};
use capset_core::groups::{group_structure, GroupContext};
use capset_core::partition::{
    count_partitions_anchor, global_equivalence_classes, low_dim_partitions,
    orbit_classes_on_partitions, sample_transporter_splits, verify_anchor_intersection,
    CapNeighborhood,
};
use capset_core::search::{find_complete_cap, pair_closed_caps, structured_cap_search};
use capset_core::{
    hyperplane_profile, Ambient, CompletabilityClass, Dimension, Point, StabilizerMethod,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn eq<T: PartialEq + std::fmt::Debug>(got: T, want: T, what: &str) -> Result<(), String> {
    ensure(got == want, format!("{what}: expected {want:?}, got {got:?}"))
}

fn within(t: Duration, limit_secs: f64, what: &str) -> Result<(), String> {
    ensure(
        t.as_secs_f64() < limit_secs,
        format!("{what} took {:.2} s, limit {limit_secs} s", t.as_secs_f64()),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn err(e: capset_core::Error) -> String {
    e.to_string()
}

fn max_cap_sizes() -> Outcome {
    let (sizes, t) = timed(|| (1..=3).map(|n| max_cap_size(Dimension::new(n).unwrap())).collect::<Vec<_>>());
    eq(sizes, vec![2, 4, 9], "max cap sizes n <= 3")?;
    within(t, 1.0, "n <= 3 searches")?;
    let (found, t20) = timed(|| structured_cap_search(20).found);
    let c = found.ok_or("no 20-cap found")?;
    ensure(c.len() == 20 && is_complete_cap(Dimension::FOUR, c).map_err(err)?, "20-cap is not complete")?;
    within(t20, 1.0, "20-cap search")?;
    let (r21, t21) = timed(|| structured_cap_search(21));
    ensure(r21.found.is_none(), "found a 21-cap")?;
    within(t21, 3600.0, "no-21-cap search")?;
    eq(max_cap_size(Dimension::FOUR), 20, "max cap size n = 4")?;
    let nodes: u64 = r21.cases.iter().map(|c| c.nodes).sum();
    Ok(format!(
        "sizes 2,4,9,20; n<=3 {:.3} s, 20-cap {:.3} s, no 21-cap {:.2} s ({nodes} nodes)",
        t.as_secs_f64(),
        t20.as_secs_f64(),
        t21.as_secs_f64()
    ))
}

fn anchor0_and_stabilizer() -> Outcome {
    let d4 = Dimension::FOUR;
    let (caps, t) = timed(|| pair_closed_caps(d4, d4.universe().without(Point::ORIGIN), 10, None));
    eq(caps.len(), 8424, "anchor-0 caps")?;
    within(t, 30.0, "anchor-0 enumeration")?;
    let s = canonical_cap();
    let (g, tb) = timed(|| setwise_stabilizer(d4, s, Ambient::Linear, StabilizerMethod::BasisImage));
    let g = g.map_err(err)?;
    eq(g.order(), 2880, "basis-image stabilizer")?;
    within(tb, 1.0, "basis-image stabilizer")?;
    let (sweep, ts) = timed(|| stabilizer_order_sweep(d4, s, Ambient::Linear));
    eq(sweep.map_err(err)?, 2880, "sweep stabilizer")?;
    within(ts, 600.0, "GL(4,3) sweep")?;
    let gl = group_order(d4, Ambient::Linear);
    eq(gl, 24_261_120, "|GL(4,3)|")?;
    eq(8424 * 2880, gl, "orbit-stabilizer")?;
    Ok(format!(
        "8424 caps in {:.2} s; |Stab| = 2880 by basis images ({:.3} s) and sweep ({:.2} s); 8424 x 2880 = 24,261,120",
        t.as_secs_f64(),
        tb.as_secs_f64(),
        ts.as_secs_f64()
    ))
}

fn cross_anchor_intersections() -> Outcome {
    let (r, t) = timed(|| verify_anchor_intersection(canonical_cap()));
    let r = r.map_err(err)?;
    eq(r.caps_tested, 8424 * 80, "intersection tests")?;
    eq(r.disjoint_cross_anchor, 0, "disjoint cross-anchor pairs")?;
    within(t, 10.0, "intersection check")?;
    Ok(format!("{} tests, 0 disjoint, {:.2} s", r.caps_tested, t.as_secs_f64()))
}

fn census() -> Outcome {
    let (hood, t) = timed(|| CapNeighborhood::new(canonical_cap()));
    let hood = hood.map_err(err)?;
    let c = &hood.census;
    eq(c.total(), 198, "disjoint caps")?;
    eq(hood.partitions.len(), 216, "partitions through S")?;
    eq((c.one, c.two, c.six), (36, 90, 72), "completability census")?;
    let uncovered = c
        .classes
        .iter()
        .filter(|(d, _)| !hood.partitions.iter().any(|p| p.contains_block(*d)))
        .count();
    eq(uncovered, 0, "disjoint caps outside every partition")?;
    within(t, 120.0, "census")?;
    Ok(format!("198 disjoint, 216 partitions, census 36/90/72, {:.2} s", t.as_secs_f64()))
}

fn classes_and_orbits() -> Outcome {
    let ctx = GroupContext::new(canonical_cap()).map_err(err)?;
    let hood = &ctx.hood;
    eq(hood.class_census().map_err(err)?, [36, 180], "E1/E2 census")?;
    let orbits = orbit_classes_on_partitions(&ctx.stabilizer, &hood.partitions);
    eq(orbits.sizes, vec![36, 180], "stabilizer orbits")?;
    for p in &hood.partitions {
        let (a, sixes) = hood.roles(p).map_err(err)?;
        ensure(hood.class_of_cap(a).map_err(err)? != CompletabilityClass::Six, "A block is a Six cap")?;
        for b in sixes {
            eq(hood.class_of_cap(b).map_err(err)?, CompletabilityClass::Six, "Six block")?;
        }
    }
    let mut profiles = 0;
    for &(c, k) in &hood.census.classes {
        if k == CompletabilityClass::Six {
            eq(hood.six_profile(c).map_err(err)?, (1, 5), "six profile")?;
            profiles += 1;
        }
    }
    eq(profiles, 72, "Six caps profiled")?;
    let split = sample_transporter_splits(hood, &ctx.stabilizer, 1, 12).map_err(err)?;
    ensure(split.sampled_pairs >= 20, "fewer than 20 sampled pairs")?;
    eq(split.balanced, split.sampled_pairs, "balanced transporter splits")?;
    Ok(format!(
        "classes 36/180, orbits 36/180, 72 profiles (1,5), {}/{} balanced splits",
        split.balanced, split.sampled_pairs
    ))
}

fn anchor0_partition_count() -> Outcome {
    let (r, t) = timed(|| count_partitions_anchor(Point::ORIGIN, 216));
    eq(r.enumerated, 454_896, "enumerated partitions")?;
    eq(r.double_count, 454_896, "8424 x 216 / 4")?;
    eq((r.e1, r.e2), (75_816, 379_080), "class split")?;
    within(t, 600.0, "partition enumeration")?;
    Ok(format!("454,896 = 8424 x 216 / 4; E1 75,816, E2 379,080; {:.2} s", t.as_secs_f64()))
}

fn global_classes() -> Outcome {
    let r = global_equivalence_classes(canonical_cap(), 1, 100, 10).map_err(err)?;
    eq(r.anchor_pairing_checked, 216, "anchor pairing coverage")?;
    eq(r.anchor_pairing_violations, 0, "anchor pairing violations")?;
    ensure(r.invariance_samples >= 100, "fewer than 100 invariance samples")?;
    eq(r.invariance_violations, 0, "class invariance violations")?;
    eq(r.same_class_witnesses, r.same_class_pairs, "same-class transporters")?;
    ensure(r.cross_class_pairs >= 10, "fewer than 10 cross-class pairs")?;
    eq(r.cross_class_witnesses, 0, "cross-class transporters")?;
    Ok(format!(
        "anchor pairing on 216, {} invariance samples, {}/{} same-class transporters, 0/{} cross-class",
        r.invariance_samples, r.same_class_witnesses, r.same_class_pairs, r.cross_class_pairs
    ))
}

fn group_facts() -> Outcome {
    let start = Instant::now();
    let ctx = GroupContext::new(canonical_cap()).map_err(err)?;
    let r = group_structure(&ctx).map_err(err)?;
    let layers = |p: &capset_core::groups::PairStabilizers| {
        p.layers.iter().map(|l| (l.order, l.determinant_split)).collect::<Vec<_>>()
    };
    eq(r.g1.order, 1440, "|G1|")?;
    eq(r.g1.e2_orbit_sizes.clone(), vec![90, 90], "E2 orbits under G1")?;
    let once: BTreeMap<usize, usize> = [(1, 90)].into();
    eq(r.g1.two_cap_occurrences.clone(), vec![once.clone(), once], "Two caps per G1 orbit")?;
    eq(r.e1_pair.order, 80, "E1 pair stabilizer")?;
    eq(layers(&r.e1_pair), vec![(40, [40, 0]), (40, [0, 40])], "E1 pair layers")?;
    eq(r.e2_pair.order, 32, "E2 pair stabilizer")?;
    eq(layers(&r.e2_pair), vec![(8, [8, 0]), (8, [8, 0]), (16, [0, 16])], "E2 pair layers")?;
    eq(r.e2_partition_fixing.fingerprint.order, 16, "E2 partition-fixing group")?;
    ensure(!r.e1_blockwise.fingerprint.abelian, "H is abelian")?;
    eq(r.e1_blockwise_cyclic20_subgroups, 1, "cyclic subgroups of order 20 in H")?;
    ensure(r.e2_blockwise.matches().contains(&"Z4xZ2"), "K is not Z4 x Z2")?;
    eq(r.order5.elements, 144, "order-5 elements")?;
    eq(r.order5.subgroups, 36, "Z5 subgroups")?;
    eq(r.order5.fixed_e1_histogram.clone(), [(1, 36)].into(), "E1 partitions fixed per Z5")?;
    eq(r.order5.generated_order, 360, "order-5 closure")?;
    ensure(r.order5.generated_is_simple, "order-5 closure is not simple")?;
    within(start.elapsed(), 300.0, "group structure")?;
    Ok(format!(
        "|G1| 1440, E2 orbits 90+90, 40/80 and 8/16/32 with det splits, H unique Z20, K = Z4xZ2, 144 -> 36 Z5, A6-order simple closure; {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn low_dimensions() -> Outcome {
    let start = Instant::now();
    let d2 = Dimension::TWO;
    let d3 = Dimension::THREE;
    eq(d2.space().lines().len(), 12, "lines of AG(2,3)")?;
    let low2 = low_dim_partitions(d2).map_err(err)?;
    eq((low2.maximal_caps, low2.partitions, low2.affine_orbits), (54, 27, 1), "AG(2,3)")?;
    let caps = enumerate_maximal_caps(d3);
    let families = d3.space().hyperplane_families();
    for &c in &caps {
        ensure(
            transporter(d3, caps[0], c, Ambient::Affine).map_err(err)?.is_some(),
            "inequivalent 9-caps",
        )?;
        eq(cap_sum(d3, c), Point::ORIGIN, "cap sum")?;
        for p in d3.universe() - c {
            eq(completion_count(d3, c, p).map_err(err)?, 2, "completion count")?;
        }
        for f in &families {
            let prof = hyperplane_profile(c, f);
            ensure(prof == [4, 4, 1] || prof == [3, 3, 3], format!("profile {prof:?}"))?;
        }
    }
    let low3 = low_dim_partitions(d3).map_err(err)?;
    eq(low3.caps_in_unique_partition, caps.len(), "9-caps in a unique partition")?;
    let eight = find_complete_cap(d3, 8).ok_or("no complete 8-cap")?;
    ensure(is_complete_cap(d3, eight).map_err(err)?, "8-cap is not complete")?;
    within(start.elapsed(), 30.0, "low dimensions")?;
    Ok(format!(
        "AG(2,3) 12/54/27/1 orbit; {} 9-caps of AG(3,3) checked; complete 8-cap; {:.2} s",
        caps.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn digest(bin: &Path, dir: &Path, jobs: usize, tag: &str, args: &[&str]) -> Result<(String, Vec<u8>), String> {
    let report = dir.join(format!("{tag}-{jobs}.json"));
    let out = Command::new(bin)
        .arg("--jobs")
        .arg(jobs.to_string())
        .arg("--report")
        .arg(&report)
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))?;
    let text = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let d = v["digest"].as_str().ok_or("report without digest")?.to_string();
    Ok((d, out.stdout))
}

fn determinism() -> Outcome {
    let bin = Path::new(env!("CARGO_BIN_EXE_capset"));
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let setup = Command::new(bin)
        .args(["partitions", "--format", "jsonl", "--limit", "1", "--output", "first.jsonl"])
        .current_dir(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(setup.status.success(), "could not write a partition record")?;
    std::fs::write(dir.path().join("cap.json"), r#"{"dim": 3, "points": [0, 1, 3, 4]}"#)
        .map_err(|e| e.to_string())?;
    let suite: &[(&str, &[&str])] = &[
        ("verify", &["verify-all", "--depth", "deep"]),
        ("canon", &["canon", "--check"]),
        ("enum4", &["enumerate", "--dim", "4", "--anchor", "0"]),
        ("enum4bin", &["enumerate", "--dim", "4", "--anchor", "7", "--format", "binary"]),
        ("enum3", &["enumerate", "--dim", "3", "--format", "json"]),
        ("classify", &["classify"]),
        ("classify3", &["classify", "--cap-file", "cap.json"]),
        ("stabilize", &["stabilize", "--list"]),
        ("stabilize3", &["stabilize", "--cap-file", "cap.json", "--ambient", "affine", "--method", "sweep"]),
        ("partitions", &["partitions", "--format", "jsonl"]),
        ("count", &["partitions", "--count-anchor", "0"]),
        ("groups", &["groups"]),
        ("groups-partition", &["groups", "--partition", "first.jsonl"]),
        ("render-cap", &["render", "cap"]),
        ("render-partition", &["render", "partition", "--index", "100"]),
    ];
    let workers = 4;
    for (tag, args) in suite {
        let (d1, out1) = digest(bin, dir.path(), 1, tag, args)?;
        let (dn, outn) = digest(bin, dir.path(), workers, tag, args)?;
        eq(&d1, &dn, &format!("digest of `{}`", args.join(" ")))?;
        // a report on stdout carries timing; data streams must match byte for byte
        let is_report = serde_json::from_slice::<serde_json::Value>(&out1).is_ok_and(|v| v.get("digest").is_some());
        if !is_report {
            ensure(out1 == outn, format!("output of `{}` differs", args.join(" ")))?;
        }
    }
    Ok(format!("{} commands, identical digests and output for 1 and {workers} workers", suite.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("maximum cap sizes 2, 4, 9, 20", max_cap_sizes),
        ("8424 anchor-0 caps, stabilizer 2880", anchor0_and_stabilizer),
        ("caps with different anchors intersect", cross_anchor_intersections),
        ("disjoint caps and completability census", census),
        ("E1/E2 classes and stabilizer orbits", classes_and_orbits),
        ("anchor-0 partition count", anchor0_partition_count),
        ("anchor pairing and two global classes", global_classes),
        ("group structure of the stabilizer", group_facts),
        ("low dimensions", low_dimensions),
        ("deterministic digests for 1 vs N workers", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {:>2}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
