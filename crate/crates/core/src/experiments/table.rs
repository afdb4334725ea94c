//! CSV result tables.
//!
//! A table file starts with `# key: value` metadata lines, followed by an
//! RFC 4180 header row and data rows. Numbers are written in the shortest
//! form that parses back to the same `f64`.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn parse(s: &str) -> Cell {
        if s.is_empty() {
            Cell::Empty
        } else if let Ok(x) = s.parse::<f64>() {
            Cell::Num(x)
        } else {
            Cell::Text(s.to_string())
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Num(x as f64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Num(if b { 1.0 } else { 0.0 })
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the column count");
        self.rows.push(row);
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Cell at `row` in the column called `name`.
    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column_index(name).map(|c| &self.rows[row][c])
    }

    pub fn get_f64(&self, row: usize, name: &str) -> Option<f64> {
        self.get(row, name).and_then(Cell::as_f64)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    fn units_line(&self) -> String {
        self.columns
            .iter()
            .filter(|c| !c.unit.is_empty())
            .map(|c| format!("{}={}", c.name, c.unit))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            if k == "units" {
                continue;
            }
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "# units: {}", self.units_line())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once(": ")
                    .or_else(|| rest.strip_suffix(':').map(|k| (k, "")))
                    .ok_or_else(|| Error::Io(format!("bad metadata line `{line}`")))?;
                metadata.push((k.to_string(), v.to_string()));
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let units: Vec<(String, String)> = metadata
            .iter()
            .find(|(k, _)| k == "units")
            .map(|(_, v)| {
                v.split(';')
                    .filter_map(|p| p.split_once('='))
                    .map(|(n, u)| (n.to_string(), u.to_string()))
                    .collect()
            })
            .unwrap_or_default();
        metadata.retain(|(k, _)| k != "units");

        let mut r = csv::Reader::from_reader(body.as_bytes());
        let columns = r
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|name| {
                let unit = units.iter().find(|(n, _)| n == name).map(|(_, u)| u.clone()).unwrap_or_default();
                Column::new(name, unit)
            })
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(Cell::parse).collect());
        }
        Ok(ResultTable {
            columns,
            rows,
            metadata,
        })
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        ResultTable::read_csv(text.as_bytes())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new(vec![
            Column::new("route", ""),
            Column::new("value", "utility"),
            Column::new("p_a_A", "probability"),
        ]);
        t.set_meta("scenario_hash", "abc");
        t.set_meta("tool_version", "0.1.0");
        t.push_row(vec!["fp".into(), 2.193_548_387_096_774.into(), 0.1.into()]);
        t.push_row(vec!["error: bad, \"quoted\"".into(), Cell::Empty, 1e-300.into()]);
        t
    }

    #[test]
    fn round_trip() {
        let t = sample();
        let text = t.to_csv_string();
        assert!(text.starts_with("# scenario_hash: abc\n"));
        assert!(text.contains("# units: value=utility;p_a_A=probability\n"));
        assert_eq!(ResultTable::parse_csv(&text).unwrap(), t);
    }

    #[test]
    fn lookup_by_name() {
        let t = sample();
        assert_eq!(t.get_f64(0, "value"), Some(2.193_548_387_096_774));
        assert_eq!(t.get(1, "value"), Some(&Cell::Empty));
        assert_eq!(t.meta("tool_version"), Some("0.1.0"));
        assert!(t.get(0, "missing").is_none());
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn ragged_rows_panic() {
        sample().push_row(vec![Cell::Empty]);
    }

    proptest! {
        #[test]
        fn floats_survive_round_trip(xs in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL, 1..20)) {
            let mut t = ResultTable::new(vec![Column::new("x", "")]);
            for &x in &xs {
                t.push_row(vec![x.into()]);
            }
            let back = ResultTable::parse_csv(&t.to_csv_string()).unwrap();
            for (row, &x) in back.rows.iter().zip(&xs) {
                prop_assert_eq!(row[0].as_f64().unwrap().to_bits(), x.to_bits());
            }
        }
    }
}
