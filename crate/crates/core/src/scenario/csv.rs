//! CSV tables with `#` metadata lines, a header row and 12-significant-digit floats.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(x) => Cell::Float(x),
            None => Cell::Text(String::new()),
        }
    }
}

/// Twelve significant digits in scientific notation; `-0` prints as `0`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `columns` pairs each name with its unit.
    pub fn new(file_name: &str, columns: &[(&str, &str)]) -> Self {
        Table {
            file_name: file_name.into(),
            meta: Vec::new(),
            columns: columns.iter().map(|(n, u)| (n.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let units: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n} [{u}]")).collect();
        let _ = writeln!(s, "# units: {}", units.join(", "));
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Splits CSV text into data rows, skipping `#` comments and blank lines and
/// checking the header.
pub fn parse_rows(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let got: Vec<&str> = lines.next().ok_or("missing header row")?.split(',').map(str::trim).collect();
    if got != header {
        return Err(format!("expected header `{}`, found `{}`", header.join(","), got.join(",")));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let vals: Result<Vec<f64>, _> = l.split(',').map(|c| c.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == header.len() => Ok(v),
                _ => Err(format!("data row {} is malformed: `{l}`", i + 1)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_float(0.1875), "1.87500000000e-1");
        assert_eq!(format_float(-0.0), "0.00000000000e0");
        assert_eq!(format_float(123456789012345.0), "1.23456789012e14");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert!((back - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn render_layout() {
        let mut t = Table::new("x.csv", &[("a", "s"), ("b", "1")]).meta("scenario", "demo");
        t.push(vec![1.0.into(), Cell::Int(3)]);
        assert_eq!(t.render(), "# scenario: demo\n# units: a [s], b [1]\na,b\n1.00000000000e0,3\n");
    }

    #[test]
    fn parse_checks_header() {
        let rows = parse_rows("# c\nx,y\n1,2\n\n3,4\n", &["x", "y"]).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(parse_rows("x,z\n1,2\n", &["x", "y"]).is_err());
        assert!(parse_rows("x,y\n1\n", &["x", "y"]).is_err());
    }
}
