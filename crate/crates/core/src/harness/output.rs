use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::config::ExperimentKind;

/// One CSV cell. Floats use Rust's shortest round-trip formatting, so equal
/// values always print identically.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(v) => Some(v as f64),
            Value::UInt(v) => Some(v as f64),
            Value::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match *self {
            Value::UInt(v) => Some(v),
            Value::Int(v) => u64::try_from(v).ok(),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::UInt(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Text(v) => f.write_str(v),
            Value::Empty => Ok(()),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::UInt(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::UInt(v as u64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_owned())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Empty, Into::into)
    }
}

/// Rows with a fixed column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row of `(column, value)` pairs; names must match the header
    /// in order.
    pub fn push(&mut self, row: Vec<(&str, Value)>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        for ((name, _), col) in row.iter().zip(&self.columns) {
            assert_eq!(name, col, "column order mismatch");
        }
        self.rows.push(row.into_iter().map(|(_, v)| v).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell at `row` in column `name`.
    ///
    /// # Panics
    /// On an unknown column or row index.
    pub fn get(&self, row: usize, name: &str) -> &Value {
        let col = self.column_index(name).unwrap_or_else(|| panic!("no column {name}"));
        &self.rows[row][col]
    }

    pub fn f64(&self, row: usize, name: &str) -> f64 {
        self.get(row, name).as_f64().unwrap_or(f64::NAN)
    }

    pub fn bool(&self, row: usize, name: &str) -> bool {
        self.get(row, name).as_bool().unwrap_or_else(|| panic!("column {name} is not boolean"))
    }
}

/// A point of plot data: `figure` groups series that share axes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub figure: String,
    pub series: String,
    pub x: f64,
    pub y: f64,
}

impl PlotPoint {
    pub fn new(figure: &str, series: impl Into<String>, x: f64, y: f64) -> Self {
        PlotPoint { figure: figure.to_owned(), series: series.into(), x, y }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub config_hash: String,
    /// Per-replication or per-grid-point rows.
    pub rows: Table,
    /// A single summary row; `wall_ms` is appended when written.
    pub summary: Table,
    pub plot: Vec<PlotPoint>,
    pub warnings: Vec<String>,
    pub wall_ms: u64,
}

impl ExperimentResult {
    pub fn summary_f64(&self, name: &str) -> f64 {
        self.summary.f64(0, name)
    }

    pub fn summary_bool(&self, name: &str) -> bool {
        self.summary.bool(0, name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFiles {
    pub rows: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path, experiment: ExperimentKind) -> Self {
        let name = experiment.name();
        OutputFiles {
            rows: dir.join(format!("{name}_rows.csv")),
            summary: dir.join(format!("{name}_summary.csv")),
            plot: dir.join(format!("{name}_plot.csv")),
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn write_table<W: std::io::Write>(
    out: W,
    result: &ExperimentResult,
    table: &Table,
    trailing: Option<(&str, String)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["master_seed".to_owned(), "config_hash".to_owned()];
    header.extend(table.columns.iter().cloned());
    if let Some((name, _)) = &trailing {
        header.push(name.to_string());
    }
    w.write_record(&header).map_err(csv_error)?;
    let seed = result.master_seed.to_string();
    for row in &table.rows {
        let mut record = vec![seed.clone(), result.config_hash.clone()];
        record.extend(row.iter().map(|v| v.to_string()));
        if let Some((_, v)) = &trailing {
            record.push(v.clone());
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV text of the per-row table.
pub fn rows_csv(result: &ExperimentResult) -> Result<String> {
    let mut buf = Vec::new();
    write_table(&mut buf, result, &result.rows, None)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// CSV text of the summary table, with `wall_ms` as the last column.
pub fn summary_csv(result: &ExperimentResult) -> Result<String> {
    let mut buf = Vec::new();
    write_table(&mut buf, result, &result.summary, Some(("wall_ms", result.wall_ms.to_string())))?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn plot_csv(result: &ExperimentResult) -> Result<String> {
    let mut table = Table::new(&["figure", "series", "x", "y"]);
    for p in &result.plot {
        table.push(vec![
            ("figure", p.figure.as_str().into()),
            ("series", p.series.as_str().into()),
            ("x", p.x.into()),
            ("y", p.y.into()),
        ]);
    }
    let mut buf = Vec::new();
    write_table(&mut buf, result, &table, None)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Writes the three CSV files into `dir`, creating it if needed.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let files = OutputFiles::in_dir(dir, result.experiment);
    std::fs::write(&files.rows, rows_csv(result)?)?;
    std::fs::write(&files.summary, summary_csv(result)?)?;
    std::fs::write(&files.plot, plot_csv(result)?)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentResult {
        let mut rows = Table::new(&["k", "x", "label"]);
        rows.push(vec![("k", 1u64.into()), ("x", 0.1.into()), ("label", "a,b".into())]);
        rows.push(vec![("k", 2u64.into()), ("x", f64::NAN.into()), ("label", Value::Empty)]);
        let mut summary = Table::new(&["ok"]);
        summary.push(vec![("ok", true.into())]);
        ExperimentResult {
            experiment: ExperimentKind::E1ProkhorovRatio,
            master_seed: 9,
            config_hash: "abc".into(),
            rows,
            summary,
            plot: vec![PlotPoint::new("f", "s", 1.0, 2.5)],
            warnings: Vec::new(),
            wall_ms: 17,
        }
    }

    #[test]
    fn every_row_starts_with_seed_and_hash() {
        let r = sample();
        assert_eq!(rows_csv(&r).unwrap(), "master_seed,config_hash,k,x,label\n9,abc,1,0.1,\"a,b\"\n9,abc,2,NaN,\n");
        assert_eq!(summary_csv(&r).unwrap(), "master_seed,config_hash,ok,wall_ms\n9,abc,true,17\n");
        assert_eq!(plot_csv(&r).unwrap(), "master_seed,config_hash,figure,series,x,y\n9,abc,f,s,1,2.5\n");
    }

    #[test]
    #[should_panic(expected = "column order")]
    fn push_checks_column_names() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![("b", 1u64.into()), ("a", 2u64.into())]);
    }

    #[test]
    fn lookup_by_name() {
        let r = sample();
        assert_eq!(r.rows.f64(0, "x"), 0.1);
        assert_eq!(r.rows.get(1, "k").as_u64(), Some(2));
        assert!(r.summary_bool("ok"));
    }
}
