//! CSV, JSON and manifest output.

use crate::error::{Error, Result};
use crate::experiments::sweep::{ExperimentRecord, SweepMode, SweepOutput};
use crate::io::sha256_hex;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Leading CSV columns shared by every sweep.
pub const COMMON_COLUMNS: [&str; 11] =
    ["mode", "kind", "level", "pair", "t", "r", "e", "epsilon", "j", "ratio_e_epsilon", "ratio_e_sqrt_j"];

/// Trailing CSV columns shared by every sweep.
pub const HASH_COLUMNS: [&str; 2] = ["mesh_hash", "config_hash"];

pub fn csv_header(mode: SweepMode) -> Vec<String> {
    COMMON_COLUMNS.iter().chain(mode.extra_columns()).chain(HASH_COLUMNS.iter()).map(|s| s.to_string()).collect()
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// CSV bytes of a sweep; the header is always present.
pub fn csv_bytes(mode: SweepMode, records: &[ExperimentRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::IoError(e.to_string());
    w.write_record(csv_header(mode)).map_err(io)?;
    for r in records {
        let mut row = vec![
            r.mode.name().to_string(),
            r.kind.clone(),
            r.level.to_string(),
            r.pair.to_string(),
            num(r.t),
            num(r.r),
            num(r.e),
            num(r.epsilon),
            num(r.j),
            num(r.ratio_e_epsilon),
            num(r.ratio_e_sqrt_j),
        ];
        row.extend(mode.extra_columns().iter().map(|c| num(r.extra.get(*c).copied())));
        row.push(r.mesh_hash.clone());
        row.push(r.config_hash.clone());
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::IoError(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Path relative to the manifest directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Index of an output directory. The creation time is stored only here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub created_unix: u64,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

/// Writes `bytes` to `dir/rel`, creating parent directories.
pub fn write_file(dir: &Path, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
    let p = dir.join(rel);
    if let Some(parent) = p.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&p, bytes)?;
    Ok(p)
}

pub fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::IoError(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Hashes the listed files (relative to `dir`) into `dir/manifest.json`.
pub fn write_manifest(dir: &Path, files: &[String]) -> Result<Manifest> {
    let mut entries = Vec::with_capacity(files.len());
    for rel in files {
        let bytes = std::fs::read(dir.join(rel))?;
        entries.push(ManifestEntry { path: rel.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
    }
    let created_unix =
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let m = Manifest { created_unix, files: entries };
    write_file(dir, MANIFEST, &json_bytes(&m)?)?;
    Ok(m)
}

/// Re-reads every file listed in the manifest and checks its hash and size.
pub fn verify_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::ParseError(e.to_string()))?;
    for f in &m.files {
        let bytes = std::fs::read(dir.join(&f.path))?;
        if bytes.len() as u64 != f.bytes || sha256_hex(&bytes) != f.sha256 {
            return Err(Error::IoError(format!("{} does not match the manifest", f.path)));
        }
    }
    Ok(m)
}

/// Writes `<mode>.csv`, `<mode>-summary.json`, one JSON per record under
/// `records/`, and the manifest.
pub fn emit_results(out: &SweepOutput, dir: &Path) -> Result<Manifest> {
    let mode = out.summary.mode;
    let mut files = Vec::new();
    let csv_name = format!("{}.csv", mode.name());
    write_file(dir, &csv_name, &csv_bytes(mode, &out.records)?)?;
    files.push(csv_name);
    let summary_name = format!("{}-summary.json", mode.name());
    write_file(dir, &summary_name, &json_bytes(&out.summary)?)?;
    files.push(summary_name);
    for (i, r) in out.records.iter().enumerate() {
        let name = format!("records/{}-{i:05}.json", mode.name());
        write_file(dir, &name, &json_bytes(r)?)?;
        files.push(name);
    }
    write_manifest(dir, &files)
}
