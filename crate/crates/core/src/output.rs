//! CSV tables and JSON sidecars.
//!
//! Floats are written with 9 significant digits in `%g` style so outputs are
//! stable across runs and easy to diff.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::SimConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("row has {got} fields, header has {expected}")]
    RowWidth { expected: usize, got: usize },
}

/// `%.9g`-style formatting.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first so the exponent reflects the printed mantissa.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV cell.
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_g(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// In-memory CSV table with a fixed header.
pub struct Table {
    header: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), body: String::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), OutputError> {
        if row.len() != self.header.len() {
            return Err(OutputError::RowWidth { expected: self.header.len(), got: row.len() });
        }
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        writeln!(self.body, "{}", line.join(",")).expect("writing to a String");
        Ok(())
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}

/// Writes outputs into one directory, each with a `<stem>.meta.json` sidecar.
pub struct OutputDir<'a> {
    dir: PathBuf,
    subcommand: &'a str,
    config: &'a SimConfig,
    written: Vec<PathBuf>,
}

impl<'a> OutputDir<'a> {
    pub fn create(dir: &Path, subcommand: &'a str, config: &'a SimConfig) -> Result<Self, OutputError> {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.display().to_string(), source })?;
        Ok(OutputDir { dir: dir.to_path_buf(), subcommand, config, written: Vec::new() })
    }

    fn write_file(&self, path: &Path, text: &str) -> Result<(), OutputError> {
        fs::write(path, text).map_err(|source| OutputError::Io { path: path.display().to_string(), source })
    }

    fn write_sidecar(&self, name: &str, extra: serde_json::Value) -> Result<(), OutputError> {
        let stem = name.rsplit_once('.').map_or(name, |(s, _)| s);
        let meta = json!({
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.subcommand,
            "seed": self.config.seed,
            "config": self.config,
            "outputs": [name],
            "summary": extra,
        });
        let text = serde_json::to_string_pretty(&meta).expect("sidecar serializes") + "\n";
        self.write_file(&self.dir.join(format!("{stem}.meta.json")), &text)
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<PathBuf, OutputError> {
        self.csv_with_summary(name, table, serde_json::Value::Null)
    }

    pub fn csv_with_summary(
        &mut self,
        name: &str,
        table: &Table,
        summary: serde_json::Value,
    ) -> Result<PathBuf, OutputError> {
        let path = self.dir.join(name);
        self.write_file(&path, &table.render())?;
        self.write_sidecar(name, summary)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, OutputError> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("output serializes") + "\n";
        self.write_file(&path, &text)?;
        self.write_sidecar(name, serde_json::Value::Null)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Compact label for numbers inside file names: `2`, `0.5`, `inf`.
pub fn file_tag(x: f64) -> String {
    fmt_g(x).replace('-', "m").replace('+', "")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_formatting() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(95.3210897), "95.3210897");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g(123456789.0), "123456789");
        assert_eq!(fmt_g(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(9.9999999999), "10");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn table_rejects_ragged_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0.into(), "x".into()]).unwrap();
        assert!(t.push(vec![1.0.into()]).is_err());
        assert_eq!(t.render(), "a,b\n1,x\n");
    }
}
