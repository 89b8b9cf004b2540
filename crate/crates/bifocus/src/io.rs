//! Model files, CSV tables and atomic writes.

use std::fs;
use std::path::{Path, PathBuf};

use bifocus_core::GlobalMapModel;
use serde::Serialize;

use crate::Failure;

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| Failure::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Failure::io(path, e))
}

pub fn load_model(path: &Path) -> Result<GlobalMapModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Contract(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Contract(format!("{}: {e}", path.display())))
}

pub fn model_json(gm: &GlobalMapModel) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(gm).expect("models serialize");
    out.push(b'\n');
    out
}

pub fn save_model(path: &Path, gm: &GlobalMapModel) -> Result<(), Failure> {
    write_atomic(path, &model_json(gm))
}

/// `*.json` files of a directory in name order.
pub fn json_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::Contract(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

/// One header row, then one row per record.
pub fn csv_bytes<R: Serialize>(header: &[&str], rows: &[R]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
