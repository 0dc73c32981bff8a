//! Tabular report model and its CSV / JSON renderings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Version stamped into every JSON report and stage manifest.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Bool(bool),
    /// Rendered with a fixed number of decimals.
    Num { value: f64, decimals: usize },
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn num(value: f64, decimals: usize) -> Self {
        Cell::Num { value, decimals }
    }

    /// Signed QE-style value, two decimals.
    pub fn qe(value: f64) -> Self {
        Cell::num(value, 2)
    }

    pub fn percent(fraction: f64) -> Self {
        Cell::num(fraction * 100.0, 1)
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Num { value, decimals } => {
                let s = format!("{value:.decimals$}");
                // "-0.00" and "0.00" are the same cell
                if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
                    s[1..].to_string()
                } else {
                    s
                }
            }
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Num { .. } => {
                let rounded: f64 = self.render().parse().expect("formatted float parses");
                json!(rounded)
            }
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header in {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    fn json_body(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    obj.insert(c.clone(), v.to_json());
                }
                Value::Object(obj)
            })
            .collect();
        json!({
            "name": self.name,
            "columns": self.columns,
            "rows": rows,
            "notes": self.notes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn csv_bytes(table: &Table) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&table.columns).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn json_bytes(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("json value serializes");
    out.push(b'\n');
    out
}

/// One table as CSV (header row first) or as a JSON object.
pub fn emit(table: &Table, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => csv_bytes(table),
        Format::Json => {
            let mut body = table.json_body();
            body.as_object_mut()
                .expect("table body is an object")
                .insert("schema_version".into(), json!(SCHEMA_VERSION));
            json_bytes(&body)
        }
    }
}

/// Several tables in one JSON document.
pub fn emit_bundle(tables: &[Table]) -> Vec<u8> {
    json_bytes(&json!({
        "schema_version": SCHEMA_VERSION,
        "tables": tables.iter().map(Table::json_body).collect::<Vec<_>>(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["name", "value", "n"]);
        t.push(vec![Cell::text("a,b"), Cell::qe(1.776), Cell::Int(3)]);
        t.push(vec![Cell::text("c"), Cell::qe(-0.001), Cell::Empty]);
        t
    }

    #[test]
    fn csv_quotes_commas_and_rounds() {
        let s = String::from_utf8(emit(&sample(), Format::Csv)).unwrap();
        assert_eq!(s, "name,value,n\n\"a,b\",1.78,3\nc,0.00,\n");
    }

    #[test]
    fn json_has_schema_version_and_rounded_numbers() {
        let v: Value = serde_json::from_slice(&emit(&sample(), Format::Json)).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rows"][0]["value"], 1.78);
        assert_eq!(v["rows"][1]["n"], Value::Null);
    }

    #[test]
    fn percent_cells() {
        assert_eq!(Cell::percent(0.805).render(), "80.5");
        assert_eq!(Cell::percent(0.9333333).render(), "93.3");
    }
}
