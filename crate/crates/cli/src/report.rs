//! CSV tables, their JSON mirror, and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use relbelief::numeric::fmt_sig;
use serde::Serialize;
use serde_json::{Map, Value};

/// One CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .zip(r)
                        .map(|(h, v)| (h.clone(), Value::String(v.clone())))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

pub fn num(x: f64) -> String {
    fmt_sig(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// Everything a subcommand produced.
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    /// Full structured results, mirrored next to the CSV tables.
    pub detail: Value,
    /// Extra text artifacts, `(file name, contents)`.
    pub text: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
}

impl Output {
    pub fn with_table(table: Table) -> Self {
        Output {
            tables: vec![table],
            ..Default::default()
        }
    }

    pub fn detail<T: Serialize>(mut self, value: &T) -> Result<Self> {
        self.detail = serde_json::to_value(value)?;
        Ok(self)
    }

    /// Tables as CSV, separated by blank lines.
    pub fn print(&self, out: &mut impl Write) -> Result<()> {
        for (i, t) in self.tables.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            out.write_all(t.to_csv()?.as_bytes())?;
        }
        Ok(())
    }

    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        let mut tables = Map::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
            tables.insert(t.name.clone(), t.to_json());
        }
        let doc = serde_json::json!({ "tables": tables, "detail": self.detail });
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(&doc)?).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        for (name, contents) in &self.text {
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub wall_time_secs: f64,
    pub status: String,
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}
