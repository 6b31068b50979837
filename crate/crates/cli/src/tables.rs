//! Column-ordered tables written as TSV or JSON and read back by `scaling`.
//!
//! JSON tables are `{"columns": [...], "rows": [[...], ...]}` so that column
//! order survives a round trip. Missing values are `null` in JSON and empty
//! cells in TSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{input_err, CliError, TableFormat};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(tsv_cell).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header = lines.next().ok_or("empty table")?;
        let mut table = Table::new(&header.split('\t').collect::<Vec<_>>());
        for (n, line) in lines.enumerate() {
            let row: Vec<Value> = line.split('\t').map(parse_cell).collect();
            if row.len() != table.columns.len() {
                return Err(format!(
                    "line {}: expected {} cells, found {}",
                    n + 2,
                    table.columns.len(),
                    row.len()
                ));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn write(&self, dir: &Path, stem: &str, format: TableFormat) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let text = match format {
            TableFormat::Tsv => self.to_tsv(),
            TableFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(input_err)?;
                s.push('\n');
                s
            }
        };
        fs::write(&path, text).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Reads `dir/stem.{tsv,json}` in the given format.
    pub fn read(dir: &Path, stem: &str, format: TableFormat) -> Result<Self, CliError> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let text = fs::read_to_string(&path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        let parsed = match format {
            TableFormat::Tsv => Self::from_tsv(&text),
            TableFormat::Json => serde_json::from_str(&text).map_err(|e| e.to_string()),
        };
        parsed.map_err(|e| input_err(format!("{}: {e}", path.display())))
    }

    /// Numeric cell, `None` for nulls and non-numbers.
    pub fn f64(&self, row: usize, col: usize) -> Option<f64> {
        self.rows[row][col].as_f64()
    }

    pub fn u64(&self, row: usize, col: usize) -> Option<u64> {
        self.rows[row][col].as_u64()
    }

    pub fn str(&self, row: usize, col: usize) -> Option<&str> {
        self.rows[row][col].as_str()
    }
}

/// Finite floats become numbers, anything else `null`.
pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt_float(x: Option<f64>) -> Value {
    x.map_or(Value::Null, float)
}

fn tsv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_cell(cell: &str) -> Value {
    if cell.is_empty() {
        return Value::Null;
    }
    if let Ok(n) = cell.parse::<u64>() {
        return Value::from(n);
    }
    if let Ok(x) = cell.parse::<f64>() {
        if x.is_finite() {
            return float(x);
        }
    }
    Value::String(cell.to_string())
}
