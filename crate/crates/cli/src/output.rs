//! Tabular output shared by every subcommand.
//!
//! Numbers are formatted once, as text; JSON numbers are parsed back from
//! that text so CSV and JSON carry the same values.

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// How floats are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// 6 significant digits, exponential for |x| ≥ 1e5 or |x| < 1e-3.
    General,
    /// Always exponential, 6 significant digits.
    Scientific,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Null,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

pub fn format_float(x: f64, style: Style) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if style == Style::Scientific { "0.00000e0".into() } else { "0".into() };
    }
    let a = x.abs();
    if style == Style::Scientific || !(1e-3..1e5).contains(&a) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - a.log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rows under a fixed header, plus optional summary fields.
#[derive(Debug, Clone)]
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
    pub style: Style,
    /// A one-row report is written as a JSON object rather than an array.
    pub single: bool,
}

impl Report {
    pub fn new(header: Vec<&'static str>, style: Style) -> Self {
        Self { header, rows: Vec::new(), summary: Vec::new(), style, single: false }
    }

    pub fn single(header: Vec<&'static str>, row: Vec<Cell>, style: Style) -> Self {
        let mut r = Self::new(header, style);
        r.push(row);
        r.single = true;
        r
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    fn text(&self, c: &Cell) -> String {
        match c {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v, self.style),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self, c: &Cell) -> Value {
        match c {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => {
                let s = format_float(*v, self.style);
                s.parse::<f64>()
                    .ok()
                    .and_then(Number::from_f64)
                    .map_or(Value::String(s), Value::Number)
            }
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Null => Value::Null,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| self.text(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Summary as `key=value` lines, for stderr alongside CSV.
    pub fn summary_lines(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k}={}", self.text(v));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let objects: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let m: Map<String, Value> =
                    self.header.iter().zip(row).map(|(h, c)| (h.to_string(), self.json(c))).collect();
                Value::Object(m)
            })
            .collect();
        let value = if self.single && self.summary.is_empty() {
            objects.into_iter().next().unwrap_or(Value::Null)
        } else if self.summary.is_empty() {
            Value::Array(objects)
        } else {
            let mut m: Map<String, Value> =
                self.summary.iter().map(|(k, c)| (k.to_string(), self.json(c))).collect();
            m.insert("rows".into(), Value::Array(objects));
            Value::Object(m)
        };
        serde_json::to_string_pretty(&value).expect("json value serialises") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_style() {
        let f = |x| format_float(x, Style::General);
        assert_eq!(f(0.666666666), "0.666667");
        assert_eq!(f(6000.123456), "6000.12");
        assert_eq!(f(4000.0), "4000");
        assert_eq!(f(123456.0), "1.23456e5");
        assert_eq!(f(0.00012345678), "1.23457e-4");
        assert_eq!(f(0.001), "0.001");
        assert_eq!(f(-2.5), "-2.5");
        assert_eq!(f(0.0), "0");
        assert_eq!(f(f64::INFINITY), "inf");
    }

    #[test]
    fn scientific_style() {
        assert_eq!(format_float(0.9, Style::Scientific), "9.00000e-1");
        assert_eq!(format_float(29000.0, Style::Scientific), "2.90000e4");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut r = Report::new(vec!["a", "b", "c"], Style::General);
        r.push(vec![1u64.into(), 0.123456789.into(), Cell::Null]);
        r.push(vec![2u64.into(), 1e7.into(), "x".into()]);
        let csv = r.to_csv();
        assert_eq!(csv, "a,b,c\n1,0.123457,\n2,1.00000e7,x\n");
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v[0]["b"].as_f64().unwrap(), 0.123457);
        assert_eq!(v[1]["b"].as_f64().unwrap(), 1e7);
        assert!(v[0]["c"].is_null());
    }
}
