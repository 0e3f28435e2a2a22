//! CSV tables with a stable textual form.
//!
//! Reals are written with 9 significant digits and integers verbatim, so
//! reading a table back and writing it again reproduces the file byte for byte.

use std::fmt;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) if v.is_finite() => write!(f, "{v:.8e}"),
            Cell::Real(v) => write!(f, "{v}"),
        }
    }
}

impl Cell {
    fn parse(s: &str) -> Option<Self> {
        if s.bytes().all(|b| b.is_ascii_digit() || b == b'-') {
            s.parse().ok().map(Cell::Int)
        } else {
            s.parse().ok().map(Cell::Real)
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Cell::Int(v) => v as f64,
            Cell::Real(v) => v,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

/// A header row and rows of numbers, optionally preceded by one `#` comment line.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comment: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { comment: None, header: header.into_iter().map(Into::into).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut out = String::new();
        if let Some(c) = &self.comment {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(ToString::to_string))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, CliError> {
        let (comment, body) = match text.strip_prefix("# ") {
            Some(rest) => {
                let (line, body) = rest.split_once('\n').unwrap_or((rest, ""));
                (Some(line.to_string()), body)
            }
            None => (None, text),
        };
        let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = vec![];
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    Cell::parse(f)
                        .ok_or_else(|| CliError::invalid("csv", format!("row {}: {f:?} is not a number", i + 1)))
                })
                .collect::<Result<_, _>>()?;
            rows.push(row);
        }
        Ok(Self { comment, header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_csv_str(&text)
    }
}
