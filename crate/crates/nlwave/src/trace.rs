//! Columnar trace formats.
//!
//! Text traces are comma-separated with two header lines (column names,
//! units). Values use the shortest decimal representation that round-trips
//! `f64` exactly, so re-loading a trace reproduces the numbers bit for bit.
//!
//! The binary format is for long runs: magic `NLWAVETR`, a little-endian
//! `u32` version (currently 1), `u32` column count, `u64` row count, then
//! row-major `f64` samples, all little-endian. Column names are not stored;
//! binary traces are always written next to a text or manifest description.

use std::fs;
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const BINARY_MAGIC: &[u8; 8] = b"NLWAVETR";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed trace at {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

/// A named table of sample rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTrace {
    pub name: String,
    pub columns: Vec<String>,
    pub units: Vec<String>,
    /// Row-major samples; every row has `columns.len()` entries.
    pub rows: Vec<Vec<f64>>,
}

impl NamedTrace {
    pub fn new(name: impl Into<String>, columns: &[&str], units: &[&str]) -> Self {
        NamedTrace {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            units: units.iter().map(|s| s.to_string()).collect(),
        rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), TraceError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(bytes)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn render_text_trace(trace: &NamedTrace) -> String {
    let mut out = String::new();
    out.push_str(&trace.columns.join(","));
    out.push('\n');
    out.push_str(&trace.units.join(","));
    out.push('\n');
    for row in &trace.rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            // shortest round-trip decimal form
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_text_trace(path: &Path, trace: &NamedTrace) -> Result<(), TraceError> {
    write_atomic(path, render_text_trace(trace).as_bytes())
}

pub fn read_text_trace(path: &Path) -> Result<NamedTrace, TraceError> {
    let file = fs::File::open(path)?;
    let mut lines = io::BufReader::new(file).lines();
    let bad = |reason: &str| TraceError::Malformed {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let header = lines.next().ok_or_else(|| bad("missing header"))??;
    let units = lines.next().ok_or_else(|| bad("missing units line"))??;
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let units: Vec<String> = units.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| bad(&format!("bad numeric row: {e}")))?;
        if row.len() != columns.len() {
            return Err(bad("row width differs from header"));
        }
        rows.push(row);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(NamedTrace {
        name,
        columns,
        units,
        rows,
    })
}

pub fn write_binary_trace(path: &Path, trace: &NamedTrace) -> Result<(), TraceError> {
    let ncols = trace.columns.len() as u32;
    let nrows = trace.rows.len() as u64;
    let mut bytes = Vec::with_capacity(24 + trace.rows.len() * trace.columns.len() * 8);
    bytes.extend_from_slice(BINARY_MAGIC);
    bytes.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    bytes.extend_from_slice(&ncols.to_le_bytes());
    bytes.extend_from_slice(&nrows.to_le_bytes());
    for row in &trace.rows {
        for v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}

pub fn read_binary_trace(path: &Path) -> Result<NamedTrace, TraceError> {
    let mut f = fs::File::open(path)?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    let bad = |reason: &str| TraceError::Malformed {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if buf.len() < 24 || &buf[..8] != BINARY_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let ncols = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    let nrows = u64::from_le_bytes(buf[16..24].try_into().unwrap()) as usize;
    let expected = 24 + 8 * ncols * nrows;
    if buf.len() != expected {
        return Err(bad("truncated payload"));
    }
    let mut rows = Vec::with_capacity(nrows);
    let mut off = 24;
    for _ in 0..nrows {
        let mut row = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            row.push(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        rows.push(row);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(NamedTrace {
        name,
        columns: (0..ncols).map(|i| format!("col{i}")).collect(),
        units: vec![String::new(); ncols],
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> NamedTrace {
        let mut t = NamedTrace::new("sample", &["t", "value"], &["s", "1"]);
        t.push(vec![0.0, 1.0 / 3.0]);
        t.push(vec![0.1, -2.5e-17]);
        t.push(vec![0.2, f64::MIN_POSITIVE]);
        t.push(vec![0.3, 12345.678901234567]);
        t
    }

    #[test]
    fn text_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let t = sample();
        write_text_trace(&path, &t).unwrap();
        let back = read_text_trace(&path).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.units, t.units);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.bin");
        let t = sample();
        write_binary_trace(&path, &t).unwrap();
        let back = read_binary_trace(&path).unwrap();
        assert_eq!(back.rows.len(), t.rows.len());
        for (a, b) in back.rows.iter().zip(&t.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn malformed_inputs_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,1\n1.0\n").unwrap();
        assert!(matches!(
            read_text_trace(&path),
            Err(TraceError::Malformed { .. })
        ));
        let bpath = dir.path().join("bad.bin");
        std::fs::write(&bpath, b"NOTMAGIC").unwrap();
        assert!(read_binary_trace(&bpath).is_err());
    }
}
