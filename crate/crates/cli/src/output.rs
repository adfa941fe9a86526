use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::failure::Failure;

pub const SCHEMA: &str = "kdv-ist/1";

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let target = dir.join(name);
    let io = |e: std::io::Error| Failure::input(format!("{}: {e}", target.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

/// `{"schema": …, "command": …, "config": …, …body}` as pretty JSON.
pub fn write_report(dir: &Path, name: &str, command: &str, config: &impl Serialize, body: Value) -> Result<PathBuf, Failure> {
    let mut doc = json!({
        "schema": SCHEMA,
        "command": command,
        "config": config,
    });
    if let (Some(map), Value::Object(extra)) = (doc.as_object_mut(), body) {
        map.extend(extra);
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::numerics(format!("cannot encode {name}: {e}")))?;
    write_atomic(dir, name, text.as_bytes())
}

/// CSV with a header row; non-finite values are written as `nan`/`inf`.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], columns: &[&[f64]]) -> Result<PathBuf, Failure> {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut text = header.join(",");
    text.push('\n');
    for j in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| format!("{:e}", c[j])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_atomic(dir, name, text.as_bytes())
}

/// `null` for non-finite numbers, which JSON cannot hold.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}
