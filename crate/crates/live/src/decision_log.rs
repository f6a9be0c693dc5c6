//! Append-only JSON-lines log of served decisions.
//!
//! Each line records the inputs of one decision (current intensity, bounds,
//! mapping, pool digest) next to its outputs, so any entry can be re-derived
//! with [`carbonsched::selector::decide_with_bounds`].

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use carbonsched::registry::ModelPool;
use carbonsched::selector::{decide_with_bounds, BoundsWindow, IntensityBounds, MappingDirection, SelectionDecision};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("decision log {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("decision log line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("decision has no bounds (fixed policies are not logged)")]
    MissingBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSnapshot {
    pub c_low: f64,
    pub c_high: f64,
    pub window: BoundsWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionLogEntry {
    #[serde(with = "carbonsched::time::iso")]
    pub decided_at: DateTime<Utc>,
    pub c_current: f64,
    pub fraction: f64,
    pub e_target_mj: f64,
    pub model: String,
    pub mapping: MappingDirection,
    pub bounds: BoundsSnapshot,
    pub pool_sha256: String,
}

impl DecisionLogEntry {
    /// Re-run the selection from the recorded inputs.
    pub fn replay(&self, pool: &ModelPool) -> SelectionDecision {
        let bounds = IntensityBounds { c_low: self.bounds.c_low, c_high: self.bounds.c_high };
        decide_with_bounds(self.c_current, bounds, pool, self.mapping)
    }
}

/// Single serialized appender.
#[derive(Debug)]
pub struct DecisionLog {
    path: PathBuf,
    inner: Mutex<Appender>,
}

#[derive(Debug)]
struct Appender {
    file: File,
    last_decided_at: Option<DateTime<Utc>>,
}

impl DecisionLog {
    /// Open for append, creating the file if needed. Existing entries are
    /// kept; a torn final line left by a crash mid-append is cut off (it was
    /// never acknowledged).
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| LogError::Io { path: path.clone(), source };
        let existing = if path.exists() { Some(read_log(&path)?) } else { None };
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        let mut last_decided_at = None;
        if let Some(replay) = existing {
            if replay.torn_tail {
                file.set_len(replay.valid_len).map_err(io)?;
            }
            last_decided_at = replay.entries.last().map(|e| e.decided_at);
        }
        Ok(Self { path, inner: Mutex::new(Appender { file, last_decided_at }) })
    }

    /// Wrap an already-open handle positioned for appending.
    pub fn from_file(path: impl Into<PathBuf>, file: File) -> Self {
        Self { path: path.into(), inner: Mutex::new(Appender { file, last_decided_at: None }) }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Stamp, serialize and durably append a decision. `decided_at` is never
    /// earlier than the previous entry's.
    pub fn record(
        &self,
        decision: &SelectionDecision,
        mapping: MappingDirection,
        window: BoundsWindow,
        pool: &ModelPool,
        now: DateTime<Utc>,
    ) -> Result<DecisionLogEntry, LogError> {
        let bounds = decision.bounds.ok_or(LogError::MissingBounds)?;
        let mut inner = self.inner.lock().expect("decision log lock poisoned");
        let decided_at = inner.last_decided_at.map_or(now, |last| last.max(now));
        let entry = DecisionLogEntry {
            decided_at,
            c_current: decision.c_current,
            fraction: decision.fraction.unwrap_or(0.0),
            e_target_mj: decision.e_target_mj,
            model: decision.model.clone(),
            mapping,
            bounds: BoundsSnapshot { c_low: bounds.c_low, c_high: bounds.c_high, window },
            pool_sha256: pool.digest(),
        };
        append_decision(&mut inner.file, &entry).map_err(|source| LogError::Io { path: self.path.clone(), source })?;
        inner.last_decided_at = Some(decided_at);
        Ok(entry)
    }
}

/// Write one entry as a JSON line and flush it to disk.
pub fn append_decision(file: &mut File, entry: &DecisionLogEntry) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(entry).map_err(std::io::Error::other)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.flush()?;
    file.sync_data()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogReplay {
    pub entries: Vec<DecisionLogEntry>,
    /// A final line without newline or that fails to parse was dropped.
    pub torn_tail: bool,
    /// Byte length of the intact prefix.
    pub valid_len: u64,
}

pub fn read_log(path: &Path) -> Result<LogReplay, LogError> {
    let bytes = std::fs::read(path).map_err(|source| LogError::Io { path: path.to_path_buf(), source })?;
    parse_log(&bytes)
}

/// Parse decision-log bytes. A damaged final line is tolerated (crash while
/// appending); damage anywhere else is an error.
pub fn parse_log(bytes: &[u8]) -> Result<LogReplay, LogError> {
    // (line number, byte offset, contents, terminated by newline)
    let mut lines = Vec::new();
    let mut offset = 0;
    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let terminated = offset + raw.len() < bytes.len();
        if !raw.iter().all(u8::is_ascii_whitespace) {
            lines.push((idx + 1, offset, raw, terminated));
        }
        offset += raw.len() + 1;
    }

    let mut entries = Vec::with_capacity(lines.len());
    let last = lines.len().saturating_sub(1);
    for (i, &(line, start, raw, terminated)) in lines.iter().enumerate() {
        match serde_json::from_slice::<DecisionLogEntry>(raw) {
            Ok(entry) if terminated => entries.push(entry),
            Ok(_) | Err(_) if i == last => {
                return Ok(LogReplay { entries, torn_tail: true, valid_len: start as u64 });
            }
            Ok(_) => return Err(LogError::Corrupt { line, reason: "unterminated line".into() }),
            Err(e) => return Err(LogError::Corrupt { line, reason: e.to_string() }),
        }
    }
    Ok(LogReplay { entries, torn_tail: false, valid_len: bytes.len() as u64 })
}

/// Entries whose recorded model differs from a replay against `pool`.
pub fn verify_entries<'a>(entries: &'a [DecisionLogEntry], pool: &ModelPool) -> Vec<&'a DecisionLogEntry> {
    entries.iter().filter(|e| e.replay(pool).model != e.model).collect()
}
