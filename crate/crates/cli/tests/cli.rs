use std::path::Path;
use std::process::{Command, Output};

use capset_core::io::{read_caps_binary, read_caps_jsonl, PartitionRecord};
use capset_core::render::Grid;
use capset_core::{Dimension, PartitionClass};
use serde_json::Value;

fn capset(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capset"))
        .args(args)
        .current_dir(dir)
        .env_remove("CAPSET_JOBS")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report on stdout")
}

#[test]
fn enumerate_streams_jsonl_and_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = capset(dir.path(), &["enumerate", "--dim", "4", "--anchor", "0", "--format", "jsonl"]);
    assert!(out.status.success());
    let caps = read_caps_jsonl(&out.stdout[..]).unwrap();
    assert_eq!(caps.len(), 8424);
    assert!(caps.windows(2).all(|w| w[0].lex_cmp(w[1]).is_lt()));

    let out = capset(
        dir.path(),
        &["enumerate", "--dim", "2", "--format", "binary", "--output", "caps.bin"],
    );
    assert!(out.status.success());
    assert_eq!(report(&out)["results"]["count"], 54);
    let (dim, back) = read_caps_binary(&std::fs::read(dir.path().join("caps.bin")).unwrap()[..]).unwrap();
    assert_eq!((dim, back.len()), (Dimension::TWO, 54));
}

#[test]
fn classify_reports_the_census() {
    let dir = tempfile::tempdir().unwrap();
    let out = capset(dir.path(), &["classify"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["results"]["completability"], serde_json::json!({"one": 36, "two": 90, "six": 72}));
    assert_eq!(r["results"]["partitions"], 216);

    std::fs::write(dir.path().join("line.json"), "[0, 1, 2]").unwrap();
    let out = capset(dir.path(), &["classify", "--cap-file", "line.json"]);
    assert_eq!(report(&out)["results"]["is_cap"], false);
}

#[test]
fn group_orders_for_each_partition_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = capset(dir.path(), &["partitions", "--format", "jsonl"]);
    let records: Vec<PartitionRecord> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 216);
    for (class, orders) in [(PartitionClass::E1, (40, 80)), (PartitionClass::E2, (8, 16))] {
        let rec = records.iter().find(|r| r.class == Some(class)).unwrap();
        std::fs::write(dir.path().join("p.json"), serde_json::to_string(rec).unwrap()).unwrap();
        let r = report(&capset(dir.path(), &["groups", "--partition", "p.json"]));
        assert_eq!(r["results"]["blockwise_order"], orders.0);
        assert_eq!(r["results"]["setwise_order"], orders.1);
        assert_eq!(r["results"]["blockwise_determinant_split"][1], 0);
    }
}

#[test]
fn render_marks_exactly_the_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = capset(dir.path(), &["render", "cap", "--svg", "cap.svg"]);
    assert!(out.status.success());
    let grid = Grid::parse_ascii(Dimension::FOUR, std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    // the 20 cap points plus the anchor in the upper left
    assert_eq!(grid.marked().len(), 21);
    assert_eq!(grid.rows()[0][0], '@');
    assert!(std::fs::read_to_string(dir.path().join("cap.svg")).unwrap().contains("<svg"));

    std::fs::write(dir.path().join("empty.json"), "[]").unwrap();
    let out = capset(dir.path(), &["render", "cap", "--file", "empty.json"]);
    let grid = Grid::parse_ascii(Dimension::FOUR, std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(grid.marked().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(capset(dir.path(), &["canon", "--check"]).status.code(), Some(0));
    assert_eq!(capset(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(capset(dir.path(), &["enumerate", "--dim", "3", "--anchor", "0"]).status.code(), Some(2));
    assert_eq!(capset(dir.path(), &["partitions", "--format", "binary"]).status.code(), Some(2));

    std::fs::write(dir.path().join("bad.json"), "{\"dim\": 4,\n \"points\": [1, 2,").unwrap();
    let out = capset(dir.path(), &["classify", "--cap-file", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    std::fs::write(dir.path().join("empty.json"), "[]").unwrap();
    let out = capset(dir.path(), &["stabilize", "--cap-file", "empty.json", "--list"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("partial.json").exists());
}

#[test]
fn report_file_and_jobs_env() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_capset"))
            .args(["--report", "r.json", "stabilize"])
            .env("CAPSET_JOBS", jobs)
            .current_dir(dir.path())
            .output()
            .unwrap();
        let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        r
    };
    let (a, b) = (run("1"), run("3"));
    assert_eq!((a["worker_count"].as_u64(), b["worker_count"].as_u64()), (Some(1), Some(3)));
    assert_eq!(a["digest"], b["digest"]);
    assert_eq!(a["results"]["order"], 2880);
}
