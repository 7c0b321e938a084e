//! Field snapshots: raw little-endian `f64` arrays in z-major order followed
//! field by field, with a JSON sidecar describing the grid.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};

/// JSON sidecar of a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub nz: usize,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2", default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    pub h: f64,
    pub time: f64,
    pub field_names: Vec<String>,
    /// Additional keys (checkpoints store stepping metadata here).
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl SnapshotMeta {
    pub fn for_grid(grid: &Grid, time: f64, field_names: Vec<String>) -> Self {
        SnapshotMeta {
            nx: grid.nx,
            ny: grid.is_3d().then_some(grid.ny),
            nz: grid.nz,
            l1: grid.geometry.l1,
            l2: grid.geometry.l2,
            h: grid.geometry.h,
            time,
            field_names,
            extra: BTreeMap::new(),
        }
    }

    pub fn points(&self) -> usize {
        self.nx * self.ny.unwrap_or(1) * self.nz
    }
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    let base = match stem.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => stem.with_extension(""),
        _ => stem.to_path_buf(),
    };
    let mut bin = base.clone().into_os_string();
    bin.push(".bin");
    let mut json = base.into_os_string();
    json.push(".json");
    (bin.into(), json.into())
}

/// Write `<stem>.bin` and `<stem>.json`.
pub fn write_snapshot(stem: &Path, meta: &SnapshotMeta, fields: &[&[f64]]) -> Result<()> {
    if fields.len() != meta.field_names.len() {
        return Err(Error::Snapshot(format!(
            "{} fields but {} names",
            fields.len(),
            meta.field_names.len()
        )));
    }
    let n = meta.points();
    let (bin, json) = paths(stem);
    let mut bytes = Vec::with_capacity(8 * n * fields.len());
    for f in fields {
        if f.len() != n {
            return Err(Error::Snapshot(format!("field has {} values, expected {n}", f.len())));
        }
        for v in f.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(&bin)?;
    file.write_all(&bytes)?;
    fs::write(&json, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

/// Read a snapshot written by [`write_snapshot`]; `stem` may carry either extension.
pub fn read_snapshot(stem: &Path) -> Result<(SnapshotMeta, Vec<Vec<f64>>)> {
    let (bin, json) = paths(stem);
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(&json)?)?;
    let bytes = fs::read(&bin)?;
    let n = meta.points();
    let expected = 8 * n * meta.field_names.len();
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "{} holds {} bytes, expected {expected}",
            bin.display(),
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let fields = values.chunks(n.max(1)).map(|c| c.to_vec()).collect();
    Ok((meta, fields))
}
