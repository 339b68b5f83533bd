//! Kernel rows, their CSV and JSON encodings, and atomic file writes.
//!
//! Floats are written in the shortest representation that round-trips, so
//! identical inputs give byte-identical files.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "a,b,x,y,part,re,im";

/// Which structured part a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Smooth,
    Pv,
    Delta,
    DeltaPrime,
    Mirror,
}

impl Part {
    pub const ALL: [Part; 5] = [Part::Smooth, Part::Pv, Part::Delta, Part::DeltaPrime, Part::Mirror];

    pub fn tag(self) -> &'static str {
        match self {
            Part::Smooth => "smooth",
            Part::Pv => "pv",
            Part::Delta => "delta",
            Part::DeltaPrime => "delta_prime",
            Part::Mirror => "mirror",
        }
    }

    pub fn from_tag(s: &str) -> Option<Part> {
        Part::ALL.into_iter().find(|p| p.tag() == s)
    }
}

/// One kernel entry. `a`, `b` are chirality indices 1 and 2. Local parts
/// sit on their locus and carry the coefficient of the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub a: u8,
    pub b: u8,
    pub x: f64,
    pub y: f64,
    pub part: Part,
    pub re: f64,
    pub im: f64,
}

/// A kernel table plus the metadata that identifies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub schema_version: u32,
    pub kind: String,
    /// `g`, `jump`, `flow` or `hamiltonian`.
    pub object: String,
    /// `t` for flows, `μ` for jump densities.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parameter: Option<f64>,
    #[serde(rename = "L")]
    pub circumference: f64,
    pub ell: f64,
    pub state: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub rows: Vec<Row>,
}

impl KernelTable {
    pub fn parts(&self) -> Vec<Part> {
        let mut p: Vec<Part> = self.rows.iter().map(|r| r.part).collect();
        p.sort();
        p.dedup();
        p
    }
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut s = String::with_capacity(48 * rows.len() + 32);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{},{}", r.a, r.b, r.x, r.y, r.part.tag(), r.re, r.im);
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => return Err(format!("expected header `{CSV_HEADER}`, found `{h}`")),
        None => return Err("empty file".into()),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || format!("line {}: malformed row `{line}`", i + 2);
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let idx = |s: &str| match s {
            "1" => Ok(1),
            "2" => Ok(2),
            _ => Err(bad()),
        };
        rows.push(Row {
            a: idx(f[0])?,
            b: idx(f[1])?,
            x: num(f[2])?,
            y: num(f[3])?,
            part: Part::from_tag(f[4]).ok_or_else(bad)?,
            re: num(f[5])?,
            im: num(f[6])?,
        });
    }
    Ok(rows)
}

pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
