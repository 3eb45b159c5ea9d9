//! Tabular reports: aligned text for people, JSON lines for programs.
//!
//! The JSON-lines variant writes one object per row, keys in column order,
//! numbers as JSON numbers (non-finite values become `null`).

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) if *x != 0.0 && x.abs() < 1e-3 => format!("{x:.3e}"),
            Cell::Num(x) => format!("{x:.4}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Num(x) => Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Columns padded to their widest cell; text left-aligned, numbers right.
    pub fn to_text(&self) -> String {
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::render).collect())
            .collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for r in &rendered {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String], numeric: &[bool]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .zip(numeric)
                .map(|((c, &w), &num)| if num { format!("{c:>w$}") } else { format!("{c:<w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.columns, &vec![false; self.columns.len()]);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut out, &rule, &vec![false; self.columns.len()]);
        for (row, cells) in self.rows.iter().zip(&rendered) {
            let numeric: Vec<bool> = row.iter().map(|c| !matches!(c, Cell::Text(_))).collect();
            line(&mut out, cells, &numeric);
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut obj = Map::new();
            for (k, c) in self.columns.iter().zip(row) {
                obj.insert(k.clone(), c.json());
            }
            out.push_str(&Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}
