//! File helpers shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cascade_core::format::round_sig;
use serde::Serialize;
use serde_json::Value;

/// Columns of a numeric CSV. `extra` holds the optional third column.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub extra: Option<Vec<f64>>,
}

/// Reads a two- or three-column numeric CSV. A first row that does not parse
/// as numbers is treated as a header.
pub fn read_columns(path: &Path) -> Result<Columns> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_columns(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_columns(text: &str) -> Result<Columns> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = rec.iter().map(|f| f.parse::<f64>().ok()).collect();
        if rows.is_empty() && width.is_none() && parsed.iter().all(Option::is_none) {
            width = Some(rec.len());
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if !(2..=3).contains(&w) {
            bail!("row {line}: {w} columns, expected 2 or 3");
        }
        if rec.len() != w {
            bail!("row {line}: {} columns, expected {w}", rec.len());
        }
        let mut row = Vec::with_capacity(w);
        for (col, (field, v)) in rec.iter().zip(parsed).enumerate() {
            match v {
                Some(v) if v.is_finite() => row.push(v),
                _ => bail!("row {line}, column {}: cannot parse '{field}' as a number", col + 1),
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("no data rows");
    }
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    Ok(Columns { x: col(0), y: col(1), extra: (rows[0].len() == 3).then(|| col(2)) })
}

/// Rounds every floating-point number in a JSON tree to the output precision.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    write_text(path, &to_json(value)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}

pub fn write_with<F>(path: &Path, f: F) -> Result<PathBuf>
where
    F: FnOnce(&mut Vec<u8>) -> cascade_core::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).with_context(|| format!("formatting {}", path.display()))?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}
