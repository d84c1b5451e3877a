use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use log::{info, warn};

use super::{ColumnData, Dataset, Role};
use crate::error::{Error, Result};

const MISSING_TOKENS: &[&str] = &[
    "", "NA", "N/A", "na", "n/a", "?", "nan", "NaN", "null", "NULL",
];

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell.trim())
}

/// Column-to-role assignment used at ingestion. Columns not mentioned are
/// dropped.
#[derive(Clone, Debug, Default)]
pub struct RoleSpec {
    entries: Vec<(String, Role)>,
}

impl RoleSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, column: impl Into<String>, role: Role) -> Self {
        self.entries.push((column.into(), role));
        self
    }

    pub fn target(self, column: impl Into<String>) -> Self {
        self.with(column, Role::Target)
    }

    pub fn actionable<S: Into<String>>(mut self, columns: impl IntoIterator<Item = S>) -> Self {
        for c in columns {
            self = self.with(c, Role::Actionable);
        }
        self
    }

    pub fn control<S: Into<String>>(mut self, columns: impl IntoIterator<Item = S>) -> Self {
        for c in columns {
            self = self.with(c, Role::Control);
        }
        self
    }

    pub fn entries(&self) -> &[(String, Role)] {
        &self.entries
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (name, _) in &self.entries {
            if !seen.insert(name.as_str()) {
                return Err(Error::schema(format!(
                    "column `{name}` appears more than once in the role assignment"
                )));
            }
        }
        match self
            .entries
            .iter()
            .filter(|(_, r)| *r == Role::Target)
            .count()
        {
            0 => Err(Error::schema("no target declared")),
            1 => Ok(()),
            _ => Err(Error::schema("more than one target declared")),
        }
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, roles: &RoleSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    ingest_reader(file, roles)
}

/// Reads a header-first, comma-separated table.
///
/// A column is numeric when every non-missing cell parses as a finite
/// number; the target is always categorical. Rows missing the target or a
/// control value are dropped. Missing actionable cells are kept and never
/// satisfy a proposition on that column.
pub fn ingest_reader<R: Read>(reader: R, roles: &RoleSpec) -> Result<Dataset> {
    roles.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|source| Error::Csv { row: 0, source })?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();

    let mut selected = Vec::with_capacity(roles.entries().len());
    for (name, role) in roles.entries() {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(format!("column `{name}` not found in header")))?;
        selected.push((idx, name.clone(), *role));
    }
    // keep header order so that proposition order follows the file
    selected.sort_by_key(|(idx, _, _)| *idx);

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); selected.len()];
    let mut dropped = 0usize;
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            row: row + 1,
            source,
        })?;
        let values: Vec<Option<String>> = selected
            .iter()
            .map(|(idx, _, _)| {
                let raw = record.get(*idx).unwrap_or("");
                (!is_missing(raw)).then(|| raw.trim().to_owned())
            })
            .collect();
        let incomplete = selected
            .iter()
            .zip(&values)
            .any(|((_, _, role), v)| *role != Role::Actionable && v.is_none());
        if incomplete {
            dropped += 1;
            continue;
        }
        for (col, v) in cells.iter_mut().zip(values) {
            col.push(v);
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} rows with a missing target or control value");
    }

    let mut columns = Vec::with_capacity(selected.len());
    for ((_, name, role), col) in selected.into_iter().zip(cells) {
        let data = if role == Role::Target {
            ColumnData::categorical_from_strings(&col)
        } else {
            infer_column(&col)
        };
        columns.push((name, role, data));
    }
    let ds = Dataset::from_columns(columns)?;
    info!("ingested {} rows", ds.n_rows());
    Ok(ds)
}

fn infer_column(cells: &[Option<String>]) -> ColumnData {
    let parsed: Option<Vec<Option<f64>>> = cells
        .iter()
        .map(|c| match c {
            None => Some(None),
            Some(s) => s.parse::<f64>().ok().filter(|x| x.is_finite()).map(Some),
        })
        .collect();
    match parsed {
        Some(values) if values.iter().any(Option::is_some) => ColumnData::Numeric { values },
        _ => ColumnData::categorical_from_strings(cells),
    }
}
