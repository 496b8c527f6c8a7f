//! Comma-separated output files with an optional `#` metadata block.
//!
//! Floats are written with 17 significant digits, which reproduces every
//! `f64` exactly on re-reading. Data sections never contain timestamps, so
//! files are deterministic given the configuration and code version.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::solver::{SeriesRecord, SimState, Solver};

pub const SERIES_COLUMNS: [&str; 10] = [
    "t",
    "g",
    "h",
    "gdot",
    "hdot",
    "span",
    "max_v",
    "min_u_core",
    "max_u",
    "floor_hits",
];

pub const SNAPSHOT_COLUMNS: [&str; 3] = ["x", "u", "v"];

#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Ordered `key = value` pairs written as `# key = value` lines. A value
/// containing newlines is written one line per `#`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Metadata::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn render(&self, out: &mut String) {
        for (k, v) in &self.entries {
            let mut lines = v.lines();
            let first = lines.next().unwrap_or("");
            let _ = writeln!(out, "# {k} = {first}");
            for l in lines {
                let _ = writeln!(out, "#   {l}");
            }
        }
    }

    /// Parses a block written by this module. Continuation lines are joined
    /// back with newlines.
    pub fn parse(text: &str) -> Metadata {
        let mut md = Metadata::new();
        for line in text.lines() {
            let Some(body) = line.strip_prefix('#') else {
                break;
            };
            if let Some(cont) = body.strip_prefix("   ") {
                if let Some((_, v)) = md.entries.last_mut() {
                    v.push('\n');
                    v.push_str(cont);
                }
            } else if let Some((k, v)) = body.trim_start().split_once(" = ") {
                md.entries.push((k.to_string(), v.to_string()));
            } else if let Some(k) = body.trim().strip_suffix(" =") {
                md.entries.push((k.to_string(), String::new()));
            }
        }
        md
    }
}

#[inline]
fn num(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

pub fn format_series(series: &[SeriesRecord], metadata: Option<&Metadata>) -> String {
    let mut out = String::with_capacity(64 + series.len() * 240);
    if let Some(md) = metadata {
        md.render(&mut out);
    }
    out.push_str(&SERIES_COLUMNS.join(","));
    out.push('\n');
    for r in series {
        for x in [r.t, r.g, r.h, r.gdot, r.hdot, r.span, r.max_v, r.min_u_core, r.max_u] {
            num(&mut out, x);
            out.push(',');
        }
        let _ = writeln!(out, "{}", r.floor_hits);
    }
    out
}

/// Header line plus one line per record.
pub fn write_series(series: &[SeriesRecord], path: &Path) -> Result<(), FileError> {
    std::fs::write(path, format_series(series, None))?;
    Ok(())
}

/// As [`write_series`], preceded by a `#` metadata block.
pub fn write_series_with_metadata(
    series: &[SeriesRecord],
    metadata: &Metadata,
    path: &Path,
) -> Result<(), FileError> {
    std::fs::write(path, format_series(series, Some(metadata)))?;
    Ok(())
}

pub fn parse_series(text: &str) -> Result<(Metadata, Vec<SeriesRecord>), FileError> {
    let metadata = Metadata::parse(text);
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let header = SERIES_COLUMNS.join(",");
    match lines.next() {
        Some((_, l)) if l.trim() == header => {}
        Some((k, l)) => {
            return Err(FileError::Parse {
                line: k + 1,
                message: format!("expected header `{header}`, found `{l}`"),
            })
        }
        None => {
            return Err(FileError::Parse {
                line: 0,
                message: "missing header".into(),
            })
        }
    }
    let mut series = Vec::new();
    for (k, l) in lines {
        let bad = |message: String| FileError::Parse { line: k + 1, message };
        let cols: Vec<&str> = l.split(',').map(str::trim).collect();
        if cols.len() != SERIES_COLUMNS.len() {
            return Err(bad(format!("expected {} columns, found {}", SERIES_COLUMNS.len(), cols.len())));
        }
        let mut v = [0.0; 9];
        for (slot, c) in v.iter_mut().zip(&cols) {
            *slot = c.parse().map_err(|e| bad(format!("`{c}`: {e}")))?;
        }
        let floor_hits = cols[9].parse().map_err(|e| bad(format!("`{}`: {e}", cols[9])))?;
        series.push(SeriesRecord {
            t: v[0],
            g: v[1],
            h: v[2],
            gdot: v[3],
            hdot: v[4],
            span: v[5],
            max_v: v[6],
            min_u_core: v[7],
            max_u: v[8],
            floor_hits,
        });
    }
    Ok((metadata, series))
}

pub fn read_series(path: &Path) -> Result<(Metadata, Vec<SeriesRecord>), FileError> {
    parse_series(&std::fs::read_to_string(path)?)
}

/// `x, u, v` at every prey node, with `v = 0` outside `(g, h)`.
pub fn format_snapshot(solver: &Solver, state: &SimState, metadata: Option<&Metadata>) -> String {
    let mut out = String::with_capacity(64 + state.u.len() * 72);
    if let Some(md) = metadata {
        md.render(&mut out);
    }
    out.push_str(&SNAPSHOT_COLUMNS.join(","));
    out.push('\n');
    for (i, &u) in state.u.iter().enumerate() {
        let x = solver.x_node(i);
        num(&mut out, x);
        out.push(',');
        num(&mut out, u);
        out.push(',');
        num(&mut out, solver.predator_at(&state.z, &state.front, x));
        out.push('\n');
    }
    out
}

pub fn write_snapshot(
    solver: &Solver,
    state: &SimState,
    metadata: Option<&Metadata>,
    path: &Path,
) -> Result<(), FileError> {
    std::fs::write(path, format_snapshot(solver, state, metadata))?;
    Ok(())
}

/// Writes `header` and `rows` of floats with a metadata block.
pub fn write_columns(
    path: &Path,
    metadata: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), FileError> {
    let mut out = String::new();
    metadata.render(&mut out);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for (k, x) in row.into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            num(&mut out, x);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
