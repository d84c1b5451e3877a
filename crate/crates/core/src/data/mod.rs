//! Tabular data: typed columns with causal roles, CSV ingestion,
//! equi-frequency discretization and stratification by control values.

mod binning;
mod csv;
mod strata;

pub use binning::{discretize, BinnedColumn};
pub use csv::{ingest_csv, ingest_reader, RoleSpec};
pub use strata::{Stratum, StratumIndex};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rowset::RowSet;

/// Default maximum number of equi-frequent bins for numeric columns.
pub const DEFAULT_MAX_BINS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Actionable,
    Control,
    Target,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Actionable => "actionable",
            Role::Control => "control",
            Role::Target => "target",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Categorical,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: Kind,
    pub role: Role,
}

/// Column declarations of a dataset.
///
/// Exactly one target, at least one actionable column, unique names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::schema(format!("duplicate column `{}`", c.name)));
            }
        }
        let targets = columns.iter().filter(|c| c.role == Role::Target).count();
        match targets {
            0 => return Err(Error::schema("no target declared")),
            1 => {}
            _ => return Err(Error::schema("more than one target declared")),
        }
        if !columns.iter().any(|c| c.role == Role::Actionable) {
            return Err(Error::schema("no actionable column declared"));
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn target(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.role == Role::Target)
            .expect("schema invariant: one target")
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = usize> + '_ {
        self.columns
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.role == role)
            .map(|(i, _)| i)
    }
}

/// Cell storage for one column. `None` marks a missing cell.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    /// `levels` are the distinct observed values; `codes` index into them.
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<u32>>,
    },
    Numeric {
        values: Vec<Option<f64>>,
    },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Categorical { codes, .. } => codes.len(),
            ColumnData::Numeric { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> Kind {
        match self {
            ColumnData::Categorical { .. } => Kind::Categorical,
            ColumnData::Numeric { .. } => Kind::Numeric,
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Categorical { codes, .. } => codes[row].is_none(),
            ColumnData::Numeric { values } => values[row].is_none(),
        }
    }

    /// Builds a categorical column from string cells; levels are sorted.
    pub fn categorical_from_strings<S: AsRef<str>>(cells: &[Option<S>]) -> Self {
        let mut levels: Vec<String> = cells
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_owned())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        levels.sort();
        let codes = cells
            .iter()
            .map(|c| {
                c.as_ref().map(|s| {
                    levels
                        .binary_search_by(|l| l.as_str().cmp(s.as_ref()))
                        .expect("level collected above") as u32
                })
            })
            .collect();
        ColumnData::Categorical { levels, codes }
    }

    /// Text of a cell as it would be printed in a report.
    pub fn display(&self, row: usize) -> Option<String> {
        match self {
            ColumnData::Categorical { levels, codes } => {
                codes[row].map(|c| levels[c as usize].clone())
            }
            ColumnData::Numeric { values } => values[row].map(format_number),
        }
    }
}

pub(crate) fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// An immutable table of rows with declared roles.
#[derive(Clone, Debug)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<ColumnData>,
    n_rows: usize,
}

impl Dataset {
    /// Assembles a dataset from named columns. Kinds are taken from the data.
    pub fn from_columns(columns: Vec<(String, Role, ColumnData)>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |(_, _, d)| d.len());
        if let Some((name, _, _)) = columns.iter().find(|(_, _, d)| d.len() != n_rows) {
            return Err(Error::schema(format!(
                "column `{name}` has a different number of rows"
            )));
        }
        let schema = Schema::new(
            columns
                .iter()
                .map(|(name, role, data)| ColumnSpec {
                    name: name.clone(),
                    kind: data.kind(),
                    role: *role,
                })
                .collect(),
        )?;
        let columns: Vec<ColumnData> = columns.into_iter().map(|(_, _, d)| d).collect();
        let t = schema.target();
        if !matches!(columns[t], ColumnData::Categorical { .. }) {
            return Err(Error::schema("target column must be categorical"));
        }
        for i in std::iter::once(t).chain(schema.with_role(Role::Control)) {
            if let Some(row) = (0..n_rows).find(|&r| columns[i].is_missing(r)) {
                return Err(Error::Cell {
                    row,
                    column: schema.columns[i].name.clone(),
                    message: "missing value in target or control column".into(),
                });
            }
        }
        Ok(Dataset {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, i: usize) -> &ColumnData {
        &self.columns[i]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&ColumnData> {
        self.schema.index_of(name).map(|i| &self.columns[i])
    }

    pub fn name(&self, i: usize) -> &str {
        &self.schema.columns[i].name
    }

    pub fn actionable(&self) -> Vec<usize> {
        self.schema.with_role(Role::Actionable).collect()
    }

    pub fn controls(&self) -> Vec<usize> {
        self.schema.with_role(Role::Control).collect()
    }

    /// Levels of the target column.
    pub fn target_levels(&self) -> &[String] {
        match &self.columns[self.schema.target()] {
            ColumnData::Categorical { levels, .. } => levels,
            ColumnData::Numeric { .. } => unreachable!("target is categorical"),
        }
    }

    /// Rows whose target equals `outcome`.
    ///
    /// Matches the level text exactly, falling back to numeric equality so
    /// that `1` selects a level written as `1.0`.
    pub fn outcome_mask(&self, outcome: &str) -> Result<RowSet> {
        let (levels, codes) = match &self.columns[self.schema.target()] {
            ColumnData::Categorical { levels, codes } => (levels, codes),
            ColumnData::Numeric { .. } => unreachable!("target is categorical"),
        };
        let wanted = levels.iter().position(|l| l == outcome).or_else(|| {
            let x: f64 = outcome.trim().parse().ok()?;
            levels
                .iter()
                .position(|l| l.trim().parse::<f64>().is_ok_and(|v| v == x))
        });
        let Some(code) = wanted else {
            return Err(Error::config(format!(
                "outcome `{outcome}` does not occur in target `{}` (levels: {})",
                self.name(self.schema.target()),
                levels.join(", ")
            )));
        };
        let code = code as u32;
        Ok(RowSet::from_fn(self.n_rows, |r| codes[r] == Some(code)))
    }
}
