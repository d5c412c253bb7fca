//! Columnar CSV output.

use std::path::Path;

use crate::error::CliError;

/// Text written in place of a number when a run could not produce one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sentinel {
    /// The blow-up guard fired.
    BlowUp,
    /// A pulse would imprint momenta beyond the grid cutoff.
    Unresolved,
    /// The compiled schedule exceeded the time budget.
    Budget,
}

impl Sentinel {
    pub fn as_str(self) -> &'static str {
        match self {
            Sentinel::BlowUp => "BLOWUP",
            Sentinel::Unresolved => "UNRESOLVED",
            Sentinel::Budget => "BUDGET",
        }
    }

    /// Maps solver errors that end a single run to a sentinel.
    pub fn from_error(err: &nlsctl_core::Error) -> Option<Sentinel> {
        use nlsctl_core::Error;
        match err {
            Error::BlowUp { .. } => Some(Sentinel::BlowUp),
            Error::ControlUnresolved { .. } => Some(Sentinel::Unresolved),
            Error::BudgetExceeded { .. } => Some(Sentinel::Budget),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Missing(Sentinel),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing(s) => s.as_str().to_string(),
            Cell::Empty => String::new(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn column(&self, name: &str) -> Vec<Cell> {
        let j = self.column_index(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

pub fn write_csv(table: &Table, path: &Path) -> Result<(), CliError> {
    let bytes = table.to_csv_bytes()?;
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
