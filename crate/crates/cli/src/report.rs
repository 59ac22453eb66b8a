//! The JSON report every command emits, and atomic file output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub results: Map<String, Value>,
    /// Wall-clock seconds per phase.
    pub timing: BTreeMap<String, f64>,
    pub worker_count: usize,
    /// SHA-256 of command, parameters and results; timing and worker count
    /// are left out so the digest only changes when the output does.
    pub digest: String,
}

impl Report {
    pub fn new(command: &str, worker_count: usize) -> Self {
        Report {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            results: Map::new(),
            timing: BTreeMap::new(),
            worker_count,
            digest: String::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.to_string(), to_value(value));
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), to_value(value));
    }

    /// Runs `f` and records its wall-clock time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timing.entry(phase.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        out
    }

    pub fn deterministic_digest(&self) -> String {
        let body = json!({
            "command": self.command,
            "parameters": self.parameters,
            "results": self.results,
        });
        let bytes = serde_json::to_vec(&body).expect("report values serialize");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn finish(mut self) -> Self {
        self.digest = self.deterministic_digest();
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).expect("report values serialize")
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so an interrupted run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Core(e.into());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_timing_and_workers() {
        let mut a = Report::new("x", 1);
        a.param("seed", 3);
        a.result("count", 8424);
        let mut b = a.clone();
        b.worker_count = 8;
        b.timing.insert("phase".into(), 1.5);
        assert_eq!(a.deterministic_digest(), b.deterministic_digest());
        b.result("count", 8425);
        assert_ne!(a.deterministic_digest(), b.deterministic_digest());
    }

    #[test]
    fn atomic_write_replaces_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
