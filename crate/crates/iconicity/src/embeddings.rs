//! Embedding CSV: `image_id,identity_id,media_id[,cov:<name>...],f0..f{D-1}`.

use std::path::Path;

use iconicity_core::{Dataset, EmbeddingRecord};

use crate::atomic::write_atomic;
use crate::error::{AppError, AppResult};
use crate::table::{fmt_f64, parse_field, read_table, render, Table};

const FIXED: [&str; 3] = ["image_id", "identity_id", "media_id"];
const COV_PREFIX: &str = "cov:";

pub fn read_embeddings(path: &Path) -> AppResult<Dataset> {
    let table = read_table(path)?;
    parse_embeddings(path, &table)
}

fn parse_embeddings(path: &Path, table: &Table) -> AppResult<Dataset> {
    let cols = &table.columns;
    if cols.len() < 4 || cols[..3] != FIXED {
        return Err(AppError::data(
            path,
            "header must start with image_id,identity_id,media_id",
        ));
    }
    let covs: Vec<&str> = cols[3..]
        .iter()
        .map_while(|c| c.strip_prefix(COV_PREFIX))
        .collect();
    let first_feature = 3 + covs.len();
    let dim = cols.len() - first_feature;
    for (k, c) in cols[first_feature..].iter().enumerate() {
        if *c != format!("f{k}") {
            return Err(AppError::data(
                path,
                format!("column {c:?} where f{k} was expected"),
            ));
        }
    }
    if dim == 0 {
        return Err(AppError::data(path, "no feature columns"));
    }

    let mut records = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let line = *line;
        if row.len() != cols.len() {
            return Err(AppError::data(
                path,
                format!("line {line}: {} fields, expected {}", row.len(), cols.len()),
            ));
        }
        let mut vector = Vec::with_capacity(dim);
        for k in 0..dim {
            let v: f64 = parse_field(
                path,
                line,
                &cols[first_feature + k],
                &row[first_feature + k],
            )?;
            if !v.is_finite() {
                return Err(AppError::data(
                    path,
                    format!("line {line}: non-finite f{k}"),
                ));
            }
            vector.push(v);
        }
        let mut rec = EmbeddingRecord::new(&row[0], &row[1], &row[2], vector);
        for (k, name) in covs.iter().enumerate() {
            let raw = &row[3 + k];
            if raw.is_empty() {
                continue;
            }
            let v: f64 = parse_field(path, line, &cols[3 + k], raw)?;
            rec = rec.with_covariate(*name, v);
        }
        records.push(rec);
    }
    Dataset::new(dim, records).map_err(|e| AppError::data(path, e.to_string()))
}

pub fn render_embeddings(header: &str, ds: &Dataset) -> Vec<u8> {
    let covs = ds.covariate_names();
    let mut columns: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    columns.extend(covs.iter().map(|c| format!("{COV_PREFIX}{c}")));
    columns.extend((0..ds.dimension()).map(|k| format!("f{k}")));
    let col_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows = ds.records().iter().map(|r| {
        let mut row = vec![
            r.image_id.clone(),
            r.identity_id.clone(),
            r.media_id.clone(),
        ];
        row.extend(
            covs.iter()
                .map(|c| r.covariate(c).map(fmt_f64).unwrap_or_default()),
        );
        row.extend(r.vector.iter().map(|&x| fmt_f64(x)));
        row
    });
    render(header, &col_refs, rows)
}

pub fn write_embeddings(path: &Path, header: &str, ds: &Dataset) -> AppResult<()> {
    write_atomic(path, &render_embeddings(header, ds))
}
