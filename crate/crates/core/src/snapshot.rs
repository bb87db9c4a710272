//! Checksummed snapshot persistence for the replay state.
//!
//! A snapshot is a single canonical JSON line followed by a comment line
//! carrying the SHA-256 of the JSON text:
//!
//! ```text
//! {"version":1,"created_at":...,"config":{...},"recents":{...},"anchors":[...]}
//! # sha256:<64 hex digits>
//! ```
//!
//! Anchors are sorted by id and items by descending probability (ties by
//! id). Floats are written with 17 significant digits, which round-trips
//! every binary64 value exactly, so `load(save(x)) == x` and identical
//! replays produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decay::AnchorList;
use crate::table::{EngineConfig, RecTable, RecencyLists};

/// Current snapshot format version.
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot malformed: {0}")]
    Malformed(String),
    #[error("snapshot version {found} unsupported (expected {SNAPSHOT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("snapshot checksum mismatch")]
    ChecksumMismatch,
}

/// A loaded snapshot: the persisted table, recency lists, and an echo of
/// the configuration the producing run used.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub version: u32,
    pub created_at: i64,
    pub config: EngineConfig,
    pub recents: RecencyLists,
    pub table: RecTable,
}

/// Render the canonical snapshot text (JSON line plus checksum line).
pub fn render_snapshot(
    table: &RecTable,
    recents: &RecencyLists,
    config: &EngineConfig,
    created_at: i64,
) -> String {
    let mut json = String::new();
    let _ = write!(
        json,
        "{{\"version\":{SNAPSHOT_VERSION},\"created_at\":{created_at},\"config\":{}",
        render_config(config)
    );
    let _ = write!(
        json,
        ",\"recents\":{{\"checkouts\":{},\"carts\":{}}}",
        render_recency(&recents.checkouts),
        render_recency(&recents.carts)
    );
    json.push_str(",\"anchors\":[");
    for (i, list) in table.lists().enumerate() {
        if i > 0 {
            json.push(',');
        }
        let _ = write!(json, "{{\"anchor\":{},\"items\":[", json_str(list.anchor()));
        for (j, (item, prob)) in list.entries().enumerate() {
            if j > 0 {
                json.push(',');
            }
            let _ = write!(json, "[{},{}]", json_str(item), fmt_f64(prob));
        }
        json.push_str("]}");
    }
    json.push_str("]}");

    let digest = sha256_hex(json.as_bytes());
    format!("{json}\n# sha256:{digest}\n")
}

/// Parse and verify snapshot text produced by [`render_snapshot`].
pub fn parse_snapshot(text: &str) -> Result<Snapshot, SnapshotError> {
    let mut lines: Vec<&str> = text.lines().collect();
    let trailer = lines
        .pop()
        .ok_or_else(|| SnapshotError::Malformed("empty file".into()))?;
    let expected = trailer
        .strip_prefix("# sha256:")
        .ok_or_else(|| SnapshotError::Malformed("missing checksum line".into()))?;
    let json = lines.join("\n");
    if json.is_empty() {
        return Err(SnapshotError::Malformed("missing document".into()));
    }
    let actual = sha256_hex(json.as_bytes());
    if !actual.eq_ignore_ascii_case(expected.trim()) {
        return Err(SnapshotError::ChecksumMismatch);
    }

    #[derive(Deserialize)]
    struct VersionProbe {
        version: u32,
    }
    let probe: VersionProbe = serde_json::from_str(&json)
        .map_err(|e| SnapshotError::Malformed(format!("no version field: {e}")))?;
    if probe.version != SNAPSHOT_VERSION {
        return Err(SnapshotError::VersionMismatch {
            found: probe.version,
        });
    }

    #[derive(Deserialize)]
    struct AnchorDoc {
        anchor: String,
        items: Vec<(String, f64)>,
    }
    #[derive(Deserialize)]
    struct SnapshotDoc {
        version: u32,
        created_at: i64,
        config: EngineConfig,
        recents: RecencyLists,
        anchors: Vec<AnchorDoc>,
    }
    let doc: SnapshotDoc =
        serde_json::from_str(&json).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
    doc.config
        .validate()
        .map_err(|e| SnapshotError::Malformed(e.to_string()))?;

    let mut table = RecTable::new();
    for anchor in doc.anchors {
        let list = AnchorList::from_entries(anchor.anchor, anchor.items)
            .map_err(|e| SnapshotError::Malformed(e.to_string()))?;
        table.set_list(list);
    }
    Ok(Snapshot {
        version: doc.version,
        created_at: doc.created_at,
        config: doc.config,
        recents: doc.recents,
        table,
    })
}

/// Write a snapshot file.
pub fn save_snapshot(
    path: impl AsRef<Path>,
    table: &RecTable,
    recents: &RecencyLists,
    config: &EngineConfig,
    created_at: i64,
) -> Result<(), SnapshotError> {
    fs::write(path, render_snapshot(table, recents, config, created_at))?;
    Ok(())
}

/// Read and verify a snapshot file.
pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot, SnapshotError> {
    let text = fs::read_to_string(path)?;
    parse_snapshot(&text)
}

fn render_config(config: &EngineConfig) -> String {
    let insertion =
        serde_json::to_string(&config.insertion).expect("enum serialization cannot fail");
    format!(
        "{{\"alpha_rec\":{},\"alpha_checkout\":{},\"alpha_cart\":{},\"epsilon\":{},\"insertion\":{},\"period_of_interest_ms\":{},\"recent_window_ms\":{},\"propagate\":{}}}",
        fmt_f64(config.alpha_rec),
        fmt_f64(config.alpha_checkout),
        fmt_f64(config.alpha_cart),
        fmt_f64(config.epsilon),
        insertion,
        config.period_of_interest_ms,
        config.recent_window_ms,
        config.propagate,
    )
}

fn render_recency(entries: &[(String, i64)]) -> String {
    let mut out = String::from("[");
    for (i, (item, ts)) in entries.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "[{},{}]", json_str(item), ts);
    }
    out.push(']');
    out
}

/// 17 significant decimal digits: exact round-trip for binary64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}
