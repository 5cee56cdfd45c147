//! CSV and JSON file formats.

use anyhow::{bail, Context, Result};
use hetcop::margins::AnyMargin;
use hetcop::DVineSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "hetcop/1";

/// A numeric table with one column per series, rows in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Table { headers, rows }
    }

    pub fn series_headers(m: usize) -> Vec<String> {
        if m == 1 {
            vec!["y".into()]
        } else {
            (1..=m).map(|i| format!("y{i}")).collect()
        }
    }

    pub fn width(&self) -> usize {
        self.headers.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Values stacked time-major.
    pub fn stacked(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        bail!("{}: no columns", path.display());
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), i + 2))?;
        if row.iter().any(|x| !x.is_finite()) {
            bail!("{}: row {} has a non-finite value", path.display(), i + 2);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(Table { headers, rows })
}

pub fn write_table(path: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(&t.headers)?;
    for r in &t.rows {
        w.write_record(r.iter().map(|x| format!("{x}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes records of arbitrary serializable rows with a header.
pub fn write_records<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// Writes `{"schema": "hetcop/1", key: body}`.
pub fn write_document<T: Serialize>(path: &Path, key: &str, body: &T) -> Result<()> {
    let mut doc = json!({ "schema": SCHEMA });
    doc[key] = serde_json::to_value(body)?;
    write_json(path, &doc)
}

pub fn read_document<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match doc.get("schema").and_then(Value::as_str) {
        Some(SCHEMA) => {}
        Some(other) => bail!("{}: unsupported schema '{other}'", path.display()),
        None => bail!("{}: missing schema field", path.display()),
    }
    let body = doc
        .get(key)
        .with_context(|| format!("{}: missing '{key}'", path.display()))?;
    serde_json::from_value(body.clone()).with_context(|| format!("{}: invalid '{key}'", path.display()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginFile {
    pub columns: Vec<String>,
    pub margins: Vec<AnyMargin>,
}

pub fn read_model(path: &Path) -> Result<DVineSpec> {
    read_document(path, "model")
}

pub fn read_margins(path: &Path) -> Result<MarginFile> {
    read_document(path, "margins")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Sidecar config path next to an output file: `data.csv` → `data.config.json`.
pub fn sidecar(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.config.json"))
}
