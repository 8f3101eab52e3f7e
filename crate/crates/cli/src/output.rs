//! CSV tables, run manifests and atomic file output.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::modelfile::hex_digest;

/// `x` with 12 significant digits: fixed notation for moderate magnitudes,
/// scientific otherwise.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        format!("{:.*}", (11 - e) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

/// A header and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_rows(&self, header: bool) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if header {
            w.write_record(&self.header).expect("in-memory write");
        }
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn to_csv(&self) -> Vec<u8> {
        self.write_rows(true)
    }

    fn header_line(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 header")
    }
}

/// Everything needed to reproduce a run. Only `started_unix` and
/// `wall_clock_seconds` vary between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub library_version: String,
    pub model_name: String,
    pub model_digest: String,
    pub limits: bowendim::Limits,
    pub root_tolerance: f64,
    pub rows: usize,
    /// SHA-256 of the CSV body written by this run (header included when
    /// the run created the file).
    pub output_digest: String,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = sibling(path, ".tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{path} has header {found:?}, this command writes {expected:?}")]
    HeaderMismatch {
        path: String,
        found: String,
        expected: String,
    },
}

/// Emits a table: appended to `out` (header written when the file is new or
/// empty) with a sidecar `<out>.manifest.json`, or printed on stdout with the
/// manifest on stderr.
pub fn emit(table: &Table, mut manifest: RunManifest, out: Option<&Path>) -> Result<(), OutputError> {
    manifest.rows = table.rows.len();
    match out {
        Some(path) => {
            let existing = match std::fs::read(path) {
                Ok(b) => b,
                Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
                Err(e) => return Err(e.into()),
            };
            let body = if existing.is_empty() {
                table.to_csv()
            } else {
                let expected = table.header_line();
                let found = String::from_utf8_lossy(&existing)
                    .lines()
                    .next()
                    .unwrap_or_default()
                    .to_string();
                if found.trim_end() != expected.trim_end() {
                    return Err(OutputError::HeaderMismatch {
                        path: path.display().to_string(),
                        found,
                        expected: expected.trim_end().to_string(),
                    });
                }
                table.write_rows(false)
            };
            manifest.output_digest = hex_digest(&body);
            let mut all = existing;
            all.extend_from_slice(&body);
            write_atomic(path, &all)?;
            let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
            write_atomic(&sibling(path, ".manifest.json"), &json)?;
        }
        None => {
            let body = table.to_csv();
            manifest.output_digest = hex_digest(&body);
            io::stdout().write_all(&body)?;
            let json = serde_json::to_string(&manifest).expect("manifest serializes");
            eprintln!("manifest: {json}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(std::f64::consts::LN_2), "0.693147180560");
        assert_eq!(sig12(1.0), "1.00000000000");
        assert_eq!(sig12(-123.456), "-123.456000000");
        assert_eq!(sig12(1.5e-9), "1.50000000000e-9");
        assert_eq!(sig12(0.0), "0");
    }

    fn manifest() -> RunManifest {
        RunManifest {
            command: "test".into(),
            parameters: serde_json::json!({}),
            library_version: "0".into(),
            model_name: "m".into(),
            model_digest: String::new(),
            limits: bowendim::Limits::default(),
            root_tolerance: 1e-10,
            rows: 0,
            output_digest: String::new(),
            started_unix: 0,
            wall_clock_seconds: 0.0,
        }
    }

    #[test]
    fn append_keeps_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        emit(&t, manifest(), Some(&path)).unwrap();
        emit(&t, manifest(), Some(&path)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n1,2\n");
        assert!(dir.path().join("out.csv.manifest.json").exists());
        assert!(!dir.path().join("out.csv.tmp").exists());
        let other = Table::new(&["c"]);
        assert!(matches!(
            emit(&other, manifest(), Some(&path)),
            Err(OutputError::HeaderMismatch { .. })
        ));
    }
}
