use serde_json::{json, Map, Value};
use std::io::Write;

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(_) | Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

pub struct Table {
    pub command: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&'static str]) -> Self {
        Self { command: command.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn write(&self, cfg: &RunConfig, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(cfg, out),
            Format::Json => {
                let v = self.to_json(cfg);
                serde_json::to_writer_pretty(&mut *out, &v)?;
                writeln!(out)
            }
        }
    }

    fn write_csv(&self, cfg: &RunConfig, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# trapcorr {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# command: {}", self.command)?;
        for line in cfg.echo().lines() {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(m)
            })
            .collect();
        json!({
            "meta": {
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.command,
                "config": cfg,
            },
            "columns": self.columns,
            "rows": rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_quoting() {
        let mut t = Table::new("density", &["x", "status"]);
        t.rows.push(vec![Cell::Num(0.1), Cell::Text("a, b".into())]);
        let mut buf = Vec::new();
        t.write(&RunConfig::default(), Format::Csv, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# trapcorr "));
        assert!(s.contains("\nx,status\n"));
        assert!(s.contains("1.0000000000000001e-1,\"a, b\""));
    }

    #[test]
    fn json_mirrors_columns() {
        let mut t = Table::new("density", &["x", "rho_tf"]);
        t.rows.push(vec![Cell::Num(0.5), Cell::Num(f64::NAN)]);
        let v = t.to_json(&RunConfig::default());
        assert_eq!(v["rows"][0]["x"], json!(0.5));
        assert_eq!(v["rows"][0]["rho_tf"], Value::Null);
        assert_eq!(v["columns"][1], json!("rho_tf"));
    }
}
