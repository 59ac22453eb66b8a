//! One function per subcommand. Each builds a [`Report`] and, for commands
//! that stream data, the data bytes.

use std::collections::BTreeMap;
use std::path::Path;

use capset_core::affine::{
    group_order, linear_span, setwise_stabilizer, stabilizer_order_sweep, MAX_MATERIALIZED,
};
use capset_core::caps::{
    anchor_point, caps_with_anchor, cap_sum, enumerate_maximal_caps, is_cap, is_complete_cap,
    known_max_cap_size,
};
use capset_core::finite_group::matrix_group_fingerprint;
use capset_core::groups::{
    blockwise_partition_stabilizer, group_structure, partition_stabilizer, GroupContext,
};
use capset_core::io::{
    canonical_cap_fixture, parse_cap_document, parse_partition_record, write_caps_binary,
    write_caps_json, write_caps_jsonl, CapDocument, PartitionRecord,
};
use capset_core::partition::{
    count_partitions_anchor, partition_class, partitions_containing, CapNeighborhood,
};
use capset_core::render::Grid;
use capset_core::{
    Ambient, Dimension, MatrixGroup, Partition, PartitionClass, Point, PointSet, StabilizerMethod,
};
use serde_json::{json, Value};

use crate::registry::{phases, registry, Depth, Shared};
use crate::report::{write_atomic, Report};
use crate::{AmbientArg, CliError, Command, Format, MethodArg, Output, RenderTarget};

type CmdResult = Result<(Output, u8), CliError>;

/// Largest group whose multiplication table is built for fingerprints.
const MAX_TABLE: usize = 4096;

pub fn dispatch(command: &Command, jobs: usize) -> CmdResult {
    match command {
        Command::VerifyAll { depth, seed } => verify_all(*depth, *seed, jobs),
        Command::Canon { check } => canon(*check, jobs),
        Command::Enumerate { dim, anchor, format, limit, output } => {
            enumerate(*dim, *anchor, *format, *limit, output.as_deref(), jobs)
        }
        Command::Classify { cap_file } => classify(cap_file.as_deref(), jobs),
        Command::Stabilize { cap_file, ambient, method, list } => {
            stabilize(cap_file.as_deref(), *ambient, *method, *list, jobs)
        }
        Command::Partitions { cap_file, count_anchor, format, limit, output } => {
            if let Some(a) = count_anchor {
                count_partitions(*a, jobs)
            } else {
                partitions(cap_file.as_deref(), *format, *limit, output.as_deref(), jobs)
            }
        }
        Command::Groups { partition, cap_file, list } => {
            groups(partition.as_deref(), cap_file.as_deref(), *list, jobs)
        }
        Command::Render { target, file, index, svg } => {
            render(*target, file.as_deref(), *index, svg.as_deref(), jobs)
        }
    }
}

fn report_on_stdout(report: Report, status: u8) -> CmdResult {
    let report = report.finish();
    Ok((
        Output {
            stdout: report.to_json().into_bytes(),
            stderr: Vec::new(),
            report,
        },
        status,
    ))
}

/// Data goes to `output` if given (and the report to standard output), or
/// to standard output (and the report to standard error).
fn emit_data(report: Report, data: Vec<u8>, output: Option<&Path>) -> CmdResult {
    let report = report.finish();
    match output {
        Some(path) => {
            write_atomic(path, &data)?;
            Ok((
                Output {
                    stdout: report.to_json().into_bytes(),
                    stderr: Vec::new(),
                    report,
                },
                0,
            ))
        }
        None => Ok((
            Output {
                stdout: data,
                stderr: report.to_json().into_bytes(),
                report,
            },
            0,
        )),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_cap(path: Option<&Path>) -> Result<CapDocument, CliError> {
    Ok(match path {
        Some(p) => parse_cap_document(&read_file(p)?)?,
        None => canonical_cap_fixture()?,
    })
}

fn path_param(path: Option<&Path>) -> Value {
    // only the file name, so reports do not depend on where files live
    path.and_then(Path::file_name)
        .map_or(Value::Null, |n| json!(n.to_string_lossy()))
}

fn dimension(n: u8) -> Result<Dimension, CliError> {
    Dimension::new(n).map_err(|e| CliError::Usage(e.to_string()))
}

fn verify_all(depth: Depth, seed: u64, jobs: usize) -> CmdResult {
    let mut report = Report::new("verify-all", jobs);
    report.param("depth", depth);
    report.param("seed", seed);
    let shared = Shared::default();
    let mut computed: BTreeMap<&str, Value> = BTreeMap::new();
    for phase in phases().into_iter().filter(|p| p.depth <= depth) {
        let values = report.timed(phase.name, || (phase.run)(&shared, seed))?;
        computed.extend(values);
    }
    let mut checks = serde_json::Map::new();
    let mut log = String::new();
    let (mut passed, mut failed) = (0usize, Vec::new());
    for e in registry().into_iter().filter(|e| e.depth <= depth) {
        let got = computed.remove(e.key).unwrap_or(Value::Null);
        let pass = got == e.expected;
        if pass {
            passed += 1;
            log.push_str(&format!("PASS {}\n", e.key));
        } else {
            log.push_str(&format!("FAIL {}: expected {}, computed {}\n", e.key, e.expected, got));
            failed.push(e.key);
        }
        checks.insert(
            e.key.to_string(),
            json!({"expected": e.expected, "computed": got, "pass": pass}),
        );
    }
    if let Some(extra) = computed.keys().next() {
        return Err(CliError::Core(capset_core::Error::InvariantViolation(format!(
            "check {extra} has no registered expectation"
        ))));
    }
    report.result("checks", checks);
    report.result("passed", passed);
    report.result("failed", &failed);
    let status = if failed.is_empty() { 0 } else { 1 };
    let (mut out, _) = report_on_stdout(report, status)?;
    out.stderr = log.into_bytes();
    Ok((out, status))
}

fn canon(check: bool, jobs: usize) -> CmdResult {
    let mut report = Report::new("canon", jobs);
    report.param("check", check);
    let (s, fixture) = report.timed("search", || (capset_core::canonical_cap(), canonical_cap_fixture()));
    let fixture = fixture?;
    let matches = fixture.points == s && fixture.dim == Dimension::FOUR;
    report.result("canonical_cap", s);
    report.result("anchor", anchor_point(Dimension::FOUR, s)?);
    report.result("matches_fixture", matches);
    let status = if check && !matches { 1 } else { 0 };
    report_on_stdout(report, status)
}

fn enumerate(
    dim: u8,
    anchor: Option<u8>,
    format: Format,
    limit: Option<usize>,
    output: Option<&Path>,
    jobs: usize,
) -> CmdResult {
    let d = dimension(dim)?;
    let anchor = match anchor {
        Some(_) if d.n() % 2 == 1 => {
            return Err(CliError::Usage(format!("maximal caps in dimension {dim} have no anchor")))
        }
        Some(a) => Some(Point::new(d, a as usize).map_err(|e| CliError::Usage(e.to_string()))?),
        None => None,
    };
    let mut report = Report::new("enumerate", jobs);
    report.param("dim", dim);
    report.param("anchor", anchor);
    report.param("format", format!("{format:?}").to_lowercase());
    report.param("limit", limit);

    let mut caps: Vec<PointSet> = report.timed("enumerate", || -> Result<_, CliError> {
        Ok(match (d.get(), anchor) {
            (4, Some(a)) => caps_with_anchor(a),
            (4, None) => d.space().points().flat_map(caps_with_anchor).collect(),
            (_, Some(a)) => {
                let mut out = Vec::new();
                for c in enumerate_maximal_caps(d) {
                    if anchor_point(d, c)? == a {
                        out.push(c);
                    }
                }
                out
            }
            (_, None) => enumerate_maximal_caps(d),
        })
    })?;
    caps.sort_by(|a, b| a.lex_cmp(*b));
    let total = caps.len();
    caps.truncate(limit.unwrap_or(usize::MAX));

    let mut data = Vec::new();
    match format {
        Format::Json => {
            write_caps_json(&mut data, &caps)?;
            data.push(b'\n');
        }
        Format::Jsonl => write_caps_jsonl(&mut data, &caps)?,
        Format::Binary => write_caps_binary(&mut data, d, &caps)?,
    }
    report.result("count", total);
    report.result("written", caps.len());
    report.result("cap_size", known_max_cap_size(d));
    emit_data(report, data, output)
}

fn classify(cap_file: Option<&Path>, jobs: usize) -> CmdResult {
    let doc = load_cap(cap_file)?;
    let (d, s) = (doc.dim, doc.points);
    let mut report = Report::new("classify", jobs);
    report.param("cap_file", path_param(cap_file));
    report.result("dim", d);
    report.result("size", s.len());
    report.result("points", s);
    let cap = is_cap(d, s);
    report.result("is_cap", cap);
    if !cap {
        return report_on_stdout(report, 0);
    }
    report.result("is_complete", is_complete_cap(d, s)?);
    report.result("sum", cap_sum(d, s));
    let maximal = s.len() == known_max_cap_size(d);
    report.result("is_maximal", maximal);
    if maximal && d.n() % 2 == 0 {
        report.result("anchor", anchor_point(d, s)?);
    }
    if maximal && d == Dimension::FOUR {
        let hood = report.timed("census", || CapNeighborhood::new(s))?;
        let [e1, e2] = hood.class_census()?;
        let c = &hood.census;
        report.result("disjoint_caps", c.total());
        report.result("completability", json!({"one": c.one, "two": c.two, "six": c.six}));
        report.result("partitions", hood.partitions.len());
        report.result("partition_classes", json!({"e1": e1, "e2": e2}));
    }
    report_on_stdout(report, 0)
}

/// Upper bound on a stabilizer order from the basis-image search: a basis
/// (plus a base point for affine maps) must be sent into the set or into
/// its complement. `None` if neither spans the space.
fn stabilizer_bound(d: Dimension, s: PointSet, ambient: Ambient) -> Option<u64> {
    let space = d.space();
    let mut best: Option<u64> = None;
    for set in [s, d.universe() - s] {
        let Some(base) = set.min() else { continue };
        let (shifted, k) = match ambient {
            Ambient::Linear => (set, d.n() as u32),
            Ambient::Affine => (space.translate(set, space.neg(base)), d.n() as u32 + 1),
        };
        if linear_span(space, shifted) == d.universe() {
            let b = (set.len() as u64).saturating_pow(k);
            best = Some(best.map_or(b, |x| x.min(b)));
        }
    }
    best
}

fn stabilize(
    cap_file: Option<&Path>,
    ambient: AmbientArg,
    method: MethodArg,
    list: bool,
    jobs: usize,
) -> CmdResult {
    let doc = load_cap(cap_file)?;
    let (d, s) = (doc.dim, doc.points);
    let amb = match ambient {
        AmbientArg::Linear => Ambient::Linear,
        AmbientArg::Affine => Ambient::Affine,
    };
    let mut report = Report::new("stabilize", jobs);
    report.param("cap_file", path_param(cap_file));
    report.param("ambient", format!("{ambient:?}").to_lowercase());
    report.param("method", format!("{method:?}").to_lowercase());
    report.param("list", list);

    if method == MethodArg::Sweep && amb == Ambient::Affine && d.get() > 3 {
        return Err(CliError::Core(capset_core::Error::Capacity {
            what: "affine sweep",
            needed: group_order(d, amb),
            limit: group_order(Dimension::THREE, amb),
        }));
    }
    // Decide before materializing whether the group can be held in memory.
    let small = group_order(d, amb) <= MAX_MATERIALIZED
        || stabilizer_bound(d, s, amb).is_some_and(|b| b <= MAX_MATERIALIZED);
    if !small {
        let order = report.timed("sweep", || stabilizer_order_sweep(d, s, amb))?;
        if order > MAX_MATERIALIZED {
            if list {
                return Err(CliError::Core(capset_core::Error::Capacity {
                    what: "stabilizer",
                    needed: order,
                    limit: MAX_MATERIALIZED,
                }));
            }
            report.result("order", order);
            return report_on_stdout(report, 0);
        }
    }
    let m = match method {
        MethodArg::Basis => StabilizerMethod::BasisImage,
        MethodArg::Sweep => StabilizerMethod::Sweep,
    };
    let g = report.timed("stabilizer", || setwise_stabilizer(d, s, amb, m))?;
    report.result("order", g.order());
    report.result("determinant_split", g.determinant_split());
    report.result("generators", MatrixGroup::from_elements(d, g.generators()));
    if g.order() <= MAX_TABLE {
        report.result("fingerprint", matrix_group_fingerprint(&g)?);
    }
    if list {
        report.result("elements", &g);
    }
    report_on_stdout(report, 0)
}

fn maximal_cap4(doc: &CapDocument) -> Result<PointSet, CliError> {
    if doc.dim != Dimension::FOUR || doc.points.len() != 20 || !is_cap(doc.dim, doc.points) {
        return Err(CliError::Usage("expected a maximal cap of AG(4,3)".into()));
    }
    Ok(doc.points)
}

fn partitions(
    cap_file: Option<&Path>,
    format: Format,
    limit: Option<usize>,
    output: Option<&Path>,
    jobs: usize,
) -> CmdResult {
    if format == Format::Binary {
        return Err(CliError::Usage("partitions are written as json or jsonl".into()));
    }
    let s = maximal_cap4(&load_cap(cap_file)?)?;
    let mut report = Report::new("partitions", jobs);
    report.param("cap_file", path_param(cap_file));
    report.param("format", format!("{format:?}").to_lowercase());
    report.param("limit", limit);
    let hood = report.timed("partitions", || CapNeighborhood::new(s))?;
    let mut records = report.timed("records", || {
        hood.partitions
            .iter()
            .map(PartitionRecord::from_partition)
            .collect::<capset_core::Result<Vec<_>>>()
    })?;
    let [e1, e2] = hood.class_census()?;
    report.result("partitions", records.len());
    report.result("partition_classes", json!({"e1": e1, "e2": e2}));
    records.truncate(limit.unwrap_or(usize::MAX));
    report.result("written", records.len());
    let mut data = Vec::new();
    match format {
        Format::Json => {
            serde_json::to_writer(&mut data, &records).map_err(capset_core::Error::from)?;
            data.push(b'\n');
        }
        _ => {
            for r in &records {
                serde_json::to_writer(&mut data, r).map_err(capset_core::Error::from)?;
                data.push(b'\n');
            }
        }
    }
    emit_data(report, data, output)
}

fn count_partitions(anchor: u8, jobs: usize) -> CmdResult {
    let a = Point::new(Dimension::FOUR, anchor as usize).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut report = Report::new("partitions", jobs);
    report.param("count_anchor", anchor);
    let per_cap = report.timed("per_cap", || partitions_containing(caps_with_anchor(a)[0]))?.len();
    let r = report.timed("count", || count_partitions_anchor(a, per_cap as u64));
    report.result("partitions_per_cap", per_cap);
    report.result("enumerated", r.enumerated);
    report.result("double_count", r.double_count);
    report.result("e1", r.e1);
    report.result("e2", r.e2);
    let status = if r.enumerated == r.double_count { 0 } else { 1 };
    report_on_stdout(report, status)
}

fn groups(partition: Option<&Path>, cap_file: Option<&Path>, list: bool, jobs: usize) -> CmdResult {
    let mut report = Report::new("groups", jobs);
    report.param("partition", path_param(partition));
    report.param("cap_file", path_param(cap_file));
    report.param("list", list);
    let Some(path) = partition else {
        let s = maximal_cap4(&load_cap(cap_file)?)?;
        let ctx = report.timed("stabilizer", || GroupContext::new(s))?;
        let r = report.timed("structure", || group_structure(&ctx))?;
        report.result("structure", &r);
        if list {
            report.result("elements", &ctx.stabilizer);
        }
        return report_on_stdout(report, 0);
    };
    let record = parse_partition_record(&read_file(path)?)?;
    let p: Partition = record.to_partition()?;
    if p.dim() != Dimension::FOUR {
        return Err(CliError::Usage("group analysis needs a partition of AG(4,3)".into()));
    }
    let base = match cap_file {
        Some(_) => maximal_cap4(&load_cap(cap_file)?)?,
        None if p.contains_block(capset_core::canonical_cap()) => capset_core::canonical_cap(),
        None => p.blocks()[0],
    };
    if !p.contains_block(base) {
        return Err(CliError::Usage("the base cap is not a block of the partition".into()));
    }
    let g = report.timed("stabilizer", || {
        setwise_stabilizer(Dimension::FOUR, base, Ambient::Affine, StabilizerMethod::BasisImage)
    })?;
    let blockwise = blockwise_partition_stabilizer(&p, &g);
    let setwise = partition_stabilizer(&p, &g);
    let class: PartitionClass = partition_class(&p)?;
    report.result("base_cap", base);
    report.result("class", class);
    report.result("base_stabilizer_order", g.order());
    report.result("blockwise_order", blockwise.order());
    report.result("blockwise_determinant_split", blockwise.determinant_split());
    report.result("blockwise_fingerprint", matrix_group_fingerprint(&blockwise)?);
    report.result("setwise_order", setwise.order());
    report.result("setwise_determinant_split", setwise.determinant_split());
    report.result("setwise_fingerprint", matrix_group_fingerprint(&setwise)?);
    if list {
        report.result("blockwise_elements", &blockwise);
        report.result("setwise_elements", &setwise);
    }
    report_on_stdout(report, 0)
}

fn render(
    target: RenderTarget,
    file: Option<&Path>,
    index: Option<usize>,
    svg: Option<&Path>,
    jobs: usize,
) -> CmdResult {
    let mut report = Report::new("render", jobs);
    report.param("target", format!("{target:?}").to_lowercase());
    report.param("file", path_param(file));
    report.param("index", index);
    let grid = match target {
        RenderTarget::Cap => {
            if index.is_some() {
                return Err(CliError::Usage("--index selects a partition".into()));
            }
            let doc = load_cap(file)?;
            let anchor = match doc.anchor {
                Some(a) => Some(a),
                None if doc.dim.n() % 2 == 0 && doc.points.len() == known_max_cap_size(doc.dim) => {
                    anchor_point(doc.dim, doc.points).ok()
                }
                None => None,
            };
            report.result("points", doc.points);
            report.result("anchor", anchor);
            Grid::of_set(doc.dim, doc.points, anchor)
        }
        RenderTarget::Partition => {
            let p = match file {
                Some(path) => parse_partition_record(&read_file(path)?)?.to_partition()?,
                None => {
                    let all = partitions_containing(capset_core::canonical_cap())?;
                    let i = index.unwrap_or(0);
                    all.get(i).cloned().ok_or_else(|| {
                        CliError::Usage(format!("index {i} out of range, there are {} partitions", all.len()))
                    })?
                }
            };
            report.result("blocks", p.blocks());
            report.result("anchor", p.anchor());
            Grid::of_partition(&p)
        }
    };
    let ascii = grid.to_ascii();
    report.result("dim", grid.dim());
    report.result("marked_cells", grid.marked().len());
    report.result("ascii", ascii.lines().collect::<Vec<_>>());
    if let Some(path) = svg {
        write_atomic(path, grid.to_svg().as_bytes())?;
        report.result("svg_bytes", grid.to_svg().len());
    }
    emit_data(report, ascii.into_bytes(), None)
}
