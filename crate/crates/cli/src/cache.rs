//! Append-only JSON-lines cache of shot Delaunay solutions.
//!
//! A hit needs an exact key match (bitwise on the floats) and the current
//! version tag; older tags are ignored, not rewritten.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use qflow_core::delaunay::DelaunayRecord;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError, CliResult};

pub const CODE_VERSION: &str = concat!("qflow-", env!("CARGO_PKG_VERSION"));
pub const MAX_LINE_BYTES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheKey {
    pub n: u32,
    pub eps: f64,
    pub step: f64,
    pub tol: f64,
}

impl CacheKey {
    fn same(&self, other: &Self) -> bool {
        self.n == other.n
            && self.eps.to_bits() == other.eps.to_bits()
            && self.step.to_bits() == other.step.to_bits()
            && self.tol.to_bits() == other.tol.to_bits()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheRecord {
    pub key: CacheKey,
    pub solution: DelaunayRecord,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub version: String,
}

/// Decodes one cache line and checks that the solution agrees with its key.
pub fn decode_line(line: &str) -> CliResult<CacheRecord> {
    if line.len() > MAX_LINE_BYTES {
        return usage("cache line too long");
    }
    let rec: CacheRecord = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => return usage(format!("bad cache line: {e}")),
    };
    let s = &rec.solution;
    if s.n != rec.key.n || s.eps.to_bits() != rec.key.eps.to_bits() {
        return usage("cache solution does not match its key");
    }
    let finite = [s.eps, s.q, s.period, s.energy, s.alpha, s.beta, s.step, rec.key.step, rec.key.tol];
    if !finite.iter().all(|v| v.is_finite()) || !(s.period > 0.0) {
        return usage("cache record has non-finite or nonpositive fields");
    }
    Ok(rec)
}

pub fn encode_line(rec: &CacheRecord) -> String {
    let mut s = serde_json::to_string(rec).expect("cache records serialize");
    s.push('\n');
    s
}

/// One cache file. Appends go through a single lock.
#[derive(Debug)]
pub struct Cache {
    path: PathBuf,
    writer: Mutex<()>,
}

impl Cache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), writer: Mutex::new(()) }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Latest valid record for `key` carrying the current version tag.
    pub fn lookup(&self, key: &CacheKey) -> CliResult<Option<CacheRecord>> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let text = match std::fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::Io(format!("{}: {e}", self.path.display()))),
        };
        Ok(text
            .lines()
            .filter_map(|l| decode_line(l).ok())
            .filter(|r| r.version == CODE_VERSION && r.key.same(key))
            .last())
    }

    pub fn append(&self, key: CacheKey, solution: DelaunayRecord) -> CliResult<()> {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let rec = CacheRecord { key, solution, created, version: CODE_VERSION.into() };
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.path.display())))?;
        f.write_all(encode_line(&rec).as_bytes())
            .map_err(|e| CliError::Io(format!("{}: {e}", self.path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(eps: f64) -> DelaunayRecord {
        DelaunayRecord { n: 5, eps, q: 0.05, period: 10.5, energy: -0.03, alpha: 0.2, beta: -1e-6, step: 1e-3 }
    }

    fn key(eps: f64) -> CacheKey {
        CacheKey { n: 5, eps, step: 1e-3, tol: 1e-12 }
    }

    #[test]
    fn line_roundtrip_is_exact() {
        let rec = CacheRecord { key: key(0.1 + 0.2), solution: record(0.1 + 0.2), created: 7, version: CODE_VERSION.into() };
        let back = decode_line(encode_line(&rec).trim_end()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.key.eps.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn rejects_inconsistent_lines() {
        let mut rec = CacheRecord { key: key(0.2), solution: record(0.3), created: 0, version: CODE_VERSION.into() };
        assert!(decode_line(&encode_line(&rec)).is_err());
        rec.solution = record(0.2);
        rec.solution.period = -1.0;
        assert!(decode_line(&encode_line(&rec)).is_err());
        assert!(decode_line("{}").is_err());
        assert!(decode_line("").is_err());
    }

    #[test]
    fn lookup_respects_key_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("c.jsonl"));
        assert_eq!(cache.lookup(&key(0.2)).unwrap(), None);
        cache.append(key(0.2), record(0.2)).unwrap();
        // a stale tag and a garbage line are skipped
        let stale = CacheRecord { key: key(0.3), solution: record(0.3), created: 0, version: "qflow-0.0.0".into() };
        let mut f = OpenOptions::new().append(true).open(cache.path()).unwrap();
        f.write_all(encode_line(&stale).as_bytes()).unwrap();
        f.write_all(b"{broken\n").unwrap();
        assert_eq!(cache.lookup(&key(0.2)).unwrap().unwrap().solution, record(0.2));
        assert_eq!(cache.lookup(&key(0.3)).unwrap(), None);
        assert_eq!(cache.lookup(&CacheKey { tol: 1e-10, ..key(0.2) }).unwrap(), None);
    }

    proptest! {
        #[test]
        fn never_panics(s in "\\PC*") {
            let _ = decode_line(&s);
        }
    }
}
