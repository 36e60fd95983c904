//! The smaller CSV formats: scores, templates, matches, similarities,
//! epoch plans and loss logs.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use iconicity_core::pairs::{EpochPlan, Label};
use iconicity_core::pooling::{Match, ScoredMatch};
use iconicity_core::train::EpochLoss;
use iconicity_core::{Dataset, Template};

use crate::error::{AppError, AppResult};
use crate::table::{fmt_f64, parse_field, read_exact, write_table};

pub const SCORE_COLUMNS: [&str; 2] = ["image_id", "score"];
pub const TEMPLATE_COLUMNS: [&str; 2] = ["template_id", "image_id"];
pub const MATCH_COLUMNS: [&str; 3] = ["template_a", "template_b", "genuine"];
pub const SIMILARITY_COLUMNS: [&str; 4] = ["template_a", "template_b", "genuine", "similarity"];
pub const PLAN_COLUMNS: [&str; 3] = ["i", "j", "y"];
pub const LOSS_COLUMNS: [&str; 2] = ["epoch", "mean_loss"];

pub fn write_scores(path: &Path, header: &str, ds: &Dataset, scores: &[f64]) -> AppResult<()> {
    let rows = ds
        .records()
        .iter()
        .zip(scores)
        .map(|(r, &s)| [r.image_id.clone(), fmt_f64(s)]);
    write_table(path, header, &SCORE_COLUMNS, rows)
}

/// Scores aligned with the dataset's record order.
pub fn read_scores(path: &Path, ds: &Dataset) -> AppResult<Vec<f64>> {
    let table = read_exact(path, &SCORE_COLUMNS)?;
    let mut by_id: HashMap<String, f64> = HashMap::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let s: f64 = parse_field(path, *line, "score", &row[1])?;
        if !s.is_finite() {
            return Err(AppError::data(
                path,
                format!("line {line}: non-finite score"),
            ));
        }
        if by_id.insert(row[0].to_string(), s).is_some() {
            return Err(AppError::data(
                path,
                format!("line {line}: duplicate image_id {}", &row[0]),
            ));
        }
    }
    ds.records()
        .iter()
        .map(|r| {
            by_id
                .get(&r.image_id)
                .copied()
                .ok_or_else(|| AppError::data(path, format!("no score for image {}", r.image_id)))
        })
        .collect()
}

/// Templates in order of first appearance; members keep file order.
pub fn read_templates(path: &Path, ds: &Dataset) -> AppResult<Vec<Template>> {
    let table = read_exact(path, &TEMPLATE_COLUMNS)?;
    let mut order: Vec<Template> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (line, row) in &table.rows {
        let member = ds.position_of(&row[1]).ok_or_else(|| {
            AppError::data(path, format!("line {line}: unknown image_id {}", &row[1]))
        })?;
        let k = *index.entry(row[0].to_string()).or_insert_with(|| {
            order.push(Template::new(&row[0], Vec::new()));
            order.len() - 1
        });
        order[k].members.push(member);
    }
    Ok(order)
}

pub fn write_templates(
    path: &Path,
    header: &str,
    ds: &Dataset,
    templates: &[Template],
) -> AppResult<()> {
    let rows = templates.iter().flat_map(|t| {
        t.members
            .iter()
            .map(move |&m| [t.id.clone(), ds.records()[m].image_id.clone()])
    });
    write_table(path, header, &TEMPLATE_COLUMNS, rows)
}

fn parse_genuine(path: &Path, line: u64, raw: &str) -> AppResult<bool> {
    match raw {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(AppError::data(
            path,
            format!("line {line}: genuine must be 0 or 1, got {raw:?}"),
        )),
    }
}

pub fn read_matches(path: &Path) -> AppResult<Vec<Match>> {
    let table = read_exact(path, &MATCH_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|(line, row)| {
            Ok(Match {
                template_a: row[0].to_string(),
                template_b: row[1].to_string(),
                genuine: parse_genuine(path, *line, &row[2])?,
            })
        })
        .collect()
}

pub fn write_matches(path: &Path, header: &str, matches: &[Match]) -> AppResult<()> {
    let rows = matches.iter().map(|m| {
        [
            m.template_a.clone(),
            m.template_b.clone(),
            u8::from(m.genuine).to_string(),
        ]
    });
    write_table(path, header, &MATCH_COLUMNS, rows)
}

pub fn write_similarities(path: &Path, header: &str, scored: &[ScoredMatch]) -> AppResult<()> {
    let rows = scored.iter().map(|m| {
        [
            m.template_a.clone(),
            m.template_b.clone(),
            u8::from(m.genuine).to_string(),
            fmt_f64(m.similarity),
        ]
    });
    write_table(path, header, &SIMILARITY_COLUMNS, rows)
}

pub fn read_similarities(path: &Path) -> AppResult<Vec<ScoredMatch>> {
    let table = read_exact(path, &SIMILARITY_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|(line, row)| {
            let similarity: f64 = parse_field(path, *line, "similarity", &row[3])?;
            if similarity.is_nan() {
                return Err(AppError::data(path, format!("line {line}: NaN similarity")));
            }
            Ok(ScoredMatch {
                template_a: row[0].to_string(),
                template_b: row[1].to_string(),
                genuine: parse_genuine(path, *line, &row[2])?,
                similarity,
            })
        })
        .collect()
}

pub fn write_plan(path: &Path, header: &str, plan: &EpochPlan) -> AppResult<()> {
    let rows = plan
        .pairs
        .iter()
        .map(|p| [p.i.to_string(), p.j.to_string(), p.y.as_i8().to_string()]);
    write_table(path, header, &PLAN_COLUMNS, rows)
}

/// Pairs of an epoch plan; labels must be `1` or `-1`.
pub fn read_plan(path: &Path) -> AppResult<Vec<(usize, usize, Label)>> {
    let table = read_exact(path, &PLAN_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|(line, row)| {
            let i: usize = parse_field(path, *line, "i", &row[0])?;
            let j: usize = parse_field(path, *line, "j", &row[1])?;
            let y: i64 = parse_field(path, *line, "y", &row[2])?;
            let y = Label::try_from(y)
                .map_err(|e| AppError::data(path, format!("line {line}: {e}")))?;
            Ok((i, j, y))
        })
        .collect()
}

pub fn write_loss_log(path: &Path, header: &str, history: &[EpochLoss]) -> AppResult<()> {
    let rows = history
        .iter()
        .map(|h| [h.epoch.to_string(), fmt_f64(h.mean_loss)]);
    write_table(path, header, &LOSS_COLUMNS, rows)
}
