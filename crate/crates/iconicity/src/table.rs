//! Shared CSV plumbing: `#` comment headers, strict column checks and
//! line-numbered errors.

use std::path::Path;

use crate::atomic::write_atomic;
use crate::error::{AppError, AppResult};

/// Data rows of a CSV file with the 1-based line each came from.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn read_table(path: &Path) -> AppResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let columns = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok(Table { columns, rows })
}

/// Reads a table whose header must equal `expected` exactly.
pub fn read_exact(path: &Path, expected: &[&str]) -> AppResult<Table> {
    let table = read_table(path)?;
    if table.columns != expected {
        return Err(AppError::data(
            path,
            format!(
                "header {:?}, expected {:?}",
                table.columns.join(","),
                expected.join(",")
            ),
        ));
    }
    Ok(table)
}

fn csv_error(path: &Path, e: csv::Error) -> AppError {
    if !e.is_io_error() {
        return AppError::data(path, e.to_string());
    }
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        other => AppError::data(path, format!("{other:?}")),
    }
}

pub fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    name: &str,
    raw: &str,
) -> AppResult<T> {
    raw.parse()
        .map_err(|_| AppError::data(path, format!("line {line}: bad {name} value {raw:?}")))
}

/// Renders a CSV with `header` comment lines ahead of the column row.
pub fn render<I, R>(header: &str, columns: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut out = header.as_bytes().to_vec();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(columns).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.flush().expect("writing to memory");
    drop(w);
    out
}

pub fn write_table<I, R>(path: &Path, header: &str, columns: &[&str], rows: I) -> AppResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    write_atomic(path, &render(header, columns, rows))
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
