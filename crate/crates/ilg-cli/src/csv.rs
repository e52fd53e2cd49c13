//! CSV serialization of run records.
//!
//! Schema:
//! `level,elements,total_steps,error_h1,e_galerkin,e_linear,e_total,effectivity,energy,newton_delta`
//!
//! Floats are written in Rust's shortest round-trip form, lines end with LF,
//! optional fields are left empty. Files are written atomically
//! (temp-then-rename) so an interrupted run never leaves a partial CSV.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use ilg::{AdaptRunRecord, LevelRecord};

pub const CSV_HEADER: &str =
    "level,elements,total_steps,error_h1,e_galerkin,e_linear,e_total,effectivity,energy,newton_delta";

pub fn render_csv(record: &AdaptRunRecord) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for level in &record.levels {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            level.level,
            level.elements,
            level.total_steps,
            opt(level.error_h1),
            level.e_galerkin,
            level.e_linear,
            level.e_total(),
            opt(level.effectivity),
            level.energy,
            opt(level.newton_delta),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Writes `contents` to `path` via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

pub fn emit_csv(record: &AdaptRunRecord, path: &Path) -> io::Result<()> {
    write_atomic(path, &render_csv(record))
}

/// Re-parses an emitted CSV; the inverse of [`render_csv`] on its image.
pub fn parse_csv(text: &str) -> Result<Vec<LevelRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty csv")?;
    if header != CSV_HEADER {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(format!("line {}: expected 10 fields", n + 2));
        }
        let req = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 2));
        let opt = |s: &str| -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                req(s).map(Some)
            }
        };
        rows.push(LevelRecord {
            level: fields[0].parse().map_err(|e| format!("line {}: {e}", n + 2))?,
            elements: fields[1].parse().map_err(|e| format!("line {}: {e}", n + 2))?,
            total_steps: fields[2].parse().map_err(|e| format!("line {}: {e}", n + 2))?,
            error_h1: opt(fields[3])?,
            e_galerkin: req(fields[4])?,
            e_linear: req(fields[5])?,
            effectivity: opt(fields[7])?,
            energy: req(fields[8])?,
            newton_delta: opt(fields[9])?,
            wall_seconds: 0.0,
        });
    }
    Ok(rows)
}
