//! Model files: versioned JSON documents that fully determine a model, its
//! limits and its tolerances.
//!
//! ```json
//! {
//!   "schema": "bowendim-model",
//!   "version": 1,
//!   "name": "ternary-conformal",
//!   "alphabet": 2,
//!   "transitions": [[1, 1], [1, 1]],
//!   "bands": [1],
//!   "rates": [[3.0], [3.0]],
//!   "stable_rates": [0.3333333333333333, 0.3333333333333333]
//! }
//! ```
//!
//! `transitions` defaults to the full shift. Exactly one of `rates`
//! (per symbol, per band) and `matrices` (per symbol, per band, row-major
//! square blocks) is given. `placement`, `limits` and `tolerances` are
//! optional.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use bowendim::models::{Placement, UnstableCocycle};
use bowendim::{BandStructure, HorseshoeModel, Limits, SubshiftOfFiniteType};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_NAME: &str = "bowendim-model";
pub const SCHEMA_VERSION: u32 = 1;

/// Tolerances carried by a model file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bisection tolerance for Bowen roots.
    pub root: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { root: 1e-10 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlacement {
    unstable_offsets: Vec<Vec<f64>>,
    stable_offsets: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    schema: String,
    version: u32,
    #[serde(default)]
    name: Option<String>,
    alphabet: usize,
    #[serde(default)]
    transitions: Option<Vec<Vec<u8>>>,
    bands: Vec<usize>,
    #[serde(default)]
    rates: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    matrices: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    stable_rates: Vec<f64>,
    #[serde(default)]
    placement: Option<RawPlacement>,
    #[serde(default)]
    limits: Option<Limits>,
    #[serde(default)]
    tolerances: Option<Tolerances>,
}

/// A schema or model-invariant violation, located in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub line: usize,
    /// JSON path of the offending value, e.g. `/rates/1/0`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            write!(f, "line {} ({}): {}", self.line, self.path, self.message)
        }
    }
}

impl std::error::Error for SchemaError {}

/// A loaded, validated model file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub name: String,
    pub model: HorseshoeModel,
    pub limits: Limits,
    pub tolerances: Tolerances,
    /// SHA-256 of the source text, hex encoded.
    pub digest: String,
}

/// Line on which each value starts, keyed by JSON path. The text is assumed
/// to be syntactically valid JSON.
fn value_lines(text: &str) -> HashMap<String, usize> {
    enum Frame {
        Object(Option<String>),
        Array(usize),
    }
    let mut out = HashMap::new();
    let mut stack: Vec<(String, Frame)> = Vec::new();
    let mut line = 1;
    let mut chars = text.chars();
    let mut path = String::new();
    let mut expect_value = true;
    let record = |out: &mut HashMap<String, usize>, p: &str, line: usize| {
        out.entry(p.to_string()).or_insert(line);
    };
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            '"' => {
                let mut s = String::new();
                while let Some(d) = chars.next() {
                    match d {
                        '\\' => {
                            if let Some(e) = chars.next() {
                                s.push(e);
                            }
                        }
                        '"' => break,
                        '\n' => {
                            line += 1;
                            s.push(d);
                        }
                        _ => s.push(d),
                    }
                }
                match stack.last_mut() {
                    Some((base, Frame::Object(key))) if key.is_none() && !expect_value => {
                        *key = Some(s.clone());
                        path = format!("{base}/{s}");
                    }
                    _ => {
                        record(&mut out, &path, line);
                    }
                }
            }
            ':' => {
                expect_value = true;
            }
            '{' | '[' => {
                record(&mut out, &path, line);
                let frame = if c == '{' {
                    expect_value = false;
                    Frame::Object(None)
                } else {
                    expect_value = true;
                    Frame::Array(0)
                };
                let base = path.clone();
                if let Frame::Array(_) = frame {
                    path = format!("{base}/0");
                }
                stack.push((base, frame));
            }
            '}' | ']' => {
                if let Some((base, _)) = stack.pop() {
                    path = base;
                }
                expect_value = false;
            }
            ',' => match stack.last_mut() {
                Some((base, Frame::Array(i))) => {
                    *i += 1;
                    path = format!("{base}/{i}");
                    expect_value = true;
                }
                Some((base, Frame::Object(key))) => {
                    *key = None;
                    path = base.clone();
                    expect_value = false;
                }
                None => {}
            },
            c if c.is_whitespace() => {}
            _ => {
                // Start of a number or literal.
                if expect_value {
                    record(&mut out, &path, line);
                    expect_value = false;
                }
            }
        }
    }
    out
}

struct Locator {
    lines: HashMap<String, usize>,
}

impl Locator {
    /// Error at `path`, or at its nearest located ancestor.
    fn error(&self, path: &str, message: impl Into<String>) -> SchemaError {
        let mut p = path.to_string();
        let line = loop {
            if let Some(&l) = self.lines.get(&p) {
                break l;
            }
            match p.rfind('/') {
                Some(i) => p.truncate(i),
                None => break 1,
            }
        };
        SchemaError {
            line,
            path: path.to_string(),
            message: message.into(),
        }
    }
}

fn check_len<T>(loc: &Locator, path: &str, v: &[T], want: usize, what: &str) -> Result<(), SchemaError> {
    if v.len() != want {
        return Err(loc.error(path, format!("expected {want} {what}, found {}", v.len())));
    }
    Ok(())
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<ModelFile, SchemaError> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| SchemaError {
        line: e.line().max(1),
        path: String::new(),
        message: e.to_string(),
    })?;
    let loc = Locator {
        lines: value_lines(text),
    };
    if raw.schema != SCHEMA_NAME {
        return Err(loc.error("/schema", format!("schema must be \"{SCHEMA_NAME}\"")));
    }
    if raw.version != SCHEMA_VERSION {
        return Err(loc.error(
            "/version",
            format!(
                "unsupported schema version {} (this build reads {SCHEMA_VERSION})",
                raw.version
            ),
        ));
    }
    let l = raw.alphabet;
    if l == 0 {
        return Err(loc.error("/alphabet", "alphabet must have at least one symbol"));
    }
    let matrix = match &raw.transitions {
        Some(rows) => {
            check_len(&loc, "/transitions", rows, l, "rows")?;
            for (i, row) in rows.iter().enumerate() {
                check_len(&loc, &format!("/transitions/{i}"), row, l, "entries")?;
                if let Some(j) = row.iter().position(|&x| x > 1) {
                    return Err(loc.error(&format!("/transitions/{i}/{j}"), "entries must be 0 or 1"));
                }
            }
            rows.clone()
        }
        None => vec![vec![1; l]; l],
    };
    let subshift = SubshiftOfFiniteType::new(&matrix).map_err(|e| loc.error("/transitions", e.to_string()))?;
    let bands = BandStructure::new(raw.bands.clone()).map_err(|e| loc.error("/bands", e.to_string()))?;
    let ell = bands.count();
    let cocycle = match (&raw.rates, &raw.matrices) {
        (Some(rates), None) => {
            check_len(&loc, "/rates", rates, l, "symbols")?;
            for (i, r) in rates.iter().enumerate() {
                check_len(&loc, &format!("/rates/{i}"), r, ell, "band rates")?;
                if let Some(j) = r.iter().position(|&x| !(x > 1.0) || !x.is_finite()) {
                    return Err(loc.error(&format!("/rates/{i}/{j}"), "unstable rates must be finite and > 1"));
                }
            }
            UnstableCocycle::Diagonal { rates: rates.clone() }
        }
        (None, Some(mats)) => {
            check_len(&loc, "/matrices", mats, l, "symbols")?;
            let mut out = Vec::with_capacity(l);
            for (i, per_band) in mats.iter().enumerate() {
                check_len(&loc, &format!("/matrices/{i}"), per_band, ell, "band blocks")?;
                let mut blocks = Vec::with_capacity(ell);
                for (j, rows) in per_band.iter().enumerate() {
                    let m = bands.multiplicity(j);
                    let p = format!("/matrices/{i}/{j}");
                    check_len(&loc, &p, rows, m, "rows")?;
                    for (r, row) in rows.iter().enumerate() {
                        check_len(&loc, &format!("{p}/{r}"), row, m, "entries")?;
                    }
                    blocks.push(DMatrix::from_fn(m, m, |r, c| rows[r][c]));
                }
                out.push(blocks);
            }
            UnstableCocycle::Matrices { matrices: out }
        }
        (Some(_), Some(_)) => return Err(loc.error("/matrices", "give either rates or matrices, not both")),
        (None, None) => return Err(loc.error("", "one of rates or matrices is required")),
    };
    check_len(&loc, "/stable_rates", &raw.stable_rates, l, "symbols")?;
    if let Some(i) = raw.stable_rates.iter().position(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(loc.error(&format!("/stable_rates/{i}"), "stable rates must lie in (0, 1)"));
    }
    let placement = match raw.placement {
        Some(p) => {
            check_len(&loc, "/placement/unstable_offsets", &p.unstable_offsets, l, "symbols")?;
            check_len(&loc, "/placement/stable_offsets", &p.stable_offsets, l, "symbols")?;
            for (i, o) in p.unstable_offsets.iter().enumerate() {
                check_len(
                    &loc,
                    &format!("/placement/unstable_offsets/{i}"),
                    o,
                    bands.unstable_dim(),
                    "coordinates",
                )?;
            }
            Some(Placement {
                unstable_offsets: p.unstable_offsets,
                stable_offsets: p.stable_offsets,
            })
        }
        None => None,
    };
    let culprit = match (&cocycle, placement.is_some()) {
        (_, true) => "/placement",
        (UnstableCocycle::Diagonal { .. }, false) => "/rates",
        (UnstableCocycle::Matrices { .. }, false) => "/matrices",
    };
    let model = HorseshoeModel::build(subshift, bands, cocycle, raw.stable_rates, placement)
        .map_err(|e| loc.error(culprit, e.to_string()))?;
    let limits = raw.limits.unwrap_or_default();
    let tolerances = raw.tolerances.unwrap_or_default();
    if !(tolerances.root > 0.0) {
        return Err(loc.error("/tolerances/root", "root tolerance must be positive"));
    }
    Ok(ModelFile {
        name: raw.name.unwrap_or_else(|| "unnamed".to_string()),
        model,
        limits,
        tolerances,
        digest: hex_digest(text.as_bytes()),
    })
}

/// Reads and validates a model file from disk.
pub fn load_model(path: &Path) -> Result<ModelFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e))?;
    parse_model(&text).map_err(|e| LoadError::Schema(path.display().to_string(), e))
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: {1}")]
    Schema(String, SchemaError),
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
