//! Tables written as CSV or JSON.

use std::io::Write;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Shortest decimal text that parses back to the same f64.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => csv_text(s),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) if !v.is_finite() => serde_json::Value::String(format_f64(*v)),
            Cell::Num(v) => serde_json::json!(v),
            Cell::Int(v) => serde_json::json!(v),
            Cell::Bool(v) => serde_json::json!(v),
            Cell::Text(s) => serde_json::json!(s),
        }
    }
}

/// Column table with scalar metadata; CSV carries the metadata as leading
/// `# key=value` lines.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub summary: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn meta(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.summary.push((key.to_string(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, mut out: impl Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                for (k, v) in &self.summary {
                    writeln!(out, "# {k}={}", v.csv())?;
                }
                writeln!(out, "{}", self.columns.iter().map(|c| csv_text(c)).collect::<Vec<_>>().join(","))?;
                for row in &self.rows {
                    writeln!(out, "{}", row.iter().map(Cell::csv).collect::<Vec<_>>().join(","))?;
                }
            }
            Format::Json => {
                let summary: serde_json::Map<String, serde_json::Value> =
                    self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: serde_json::Map<String, serde_json::Value> =
                            self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let doc = serde_json::json!({ "summary": summary, "rows": rows });
                serde_json::to_writer_pretty(&mut out, &doc)?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}
