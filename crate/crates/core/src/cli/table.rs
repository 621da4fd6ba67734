//! Tabular output shared by every subcommand: CSV with fixed scientific
//! formatting and an optional JSON mirror carrying the same digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Round-trip through the printed digits so both files agree.
            Cell::Num(x) => fmt_num(*x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// Nine significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        wr.write_record(&self.headers).map_err(err)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(Cell::csv)).map_err(err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = self
                        .headers
                        .iter()
                        .zip(r)
                        .map(|(h, c)| (h.to_string(), c.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Write `<dir>/<stem>.csv` and, if asked, `<dir>/<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str, json: bool) -> Result<Vec<PathBuf>> {
        let csv_path = dir.join(format!("{stem}.csv"));
        self.write_csv(BufWriter::new(File::create(&csv_path)?))?;
        let mut written = vec![csv_path];
        if json {
            let p = dir.join(format!("{stem}.json"));
            write_json(&p, &self.to_json())?;
            written.push(p);
        }
        Ok(written)
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.into()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![Cell::Num(1.0 / 3.0), Cell::Empty, "x".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,c\n3.33333333e-1,,x\n");
        let j = t.to_json();
        assert_eq!(j[0]["a"].as_f64().unwrap(), 3.33333333e-1);
        assert!(j[0]["b"].is_null());
    }
}
